#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "skiroute/service.hpp"

using namespace skiroute;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kDomain = 2, kIo = 3 };

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::string duration_text(double seconds) {
  const long s = std::lround(seconds);
  return fmt("%ldh %02ldm", s / 3600, (s % 3600) / 60);
}

struct Options {
  std::string format = "text";
  std::string bundle;
  std::string out;
  std::string tracks;

  bool json() const { return format == "json"; }
};

void add_format(CLI::App* sub, Options& o) {
  sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));
}

std::filesystem::path default_preset_dir() {
  if (const char* env = std::getenv("SKIROUTE_PRESETS")) return env;
  if (std::filesystem::is_directory("presets")) return "presets";
  return SKIROUTE_PRESET_DIR;
}

struct PreferenceOptions {
  std::string prefs_file;
  std::string preset;
  std::string preset_dir;

  void attach(CLI::App* sub) {
    auto* f = sub->add_option("--prefs", prefs_file, "Preference set JSON file");
    auto* p = sub->add_option("--preset", preset, "Named preset (easy, intermediate, advanced, freeride)");
    f->excludes(p);
    sub->add_option("--presets", preset_dir, "Preset directory")->envname("SKIROUTE_PRESETS");
  }

  PreferenceSet load() const {
    if (!prefs_file.empty()) return read_preference_file(prefs_file);
    if (preset.empty()) throw CLI::RequiredError("--prefs or --preset");
    const auto dir = preset_dir.empty() ? default_preset_dir() : std::filesystem::path(preset_dir);
    const auto presets = load_presets(dir);
    auto it = presets.find(preset);
    if (it == presets.end())
      throw Error(ErrorCode::InvalidArgument, "unknown preset '" + preset + "' in " + dir.string(), "preset");
    return it->second;
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------

int cmd_build(const Options& o, const std::string& geojson, const std::string& dem, const std::string& name,
              double snap, double radius) {
  const auto features = read_features_file(geojson);
  const auto grid = read_esri_ascii_file(dem);
  auto built = build_resort(features, grid, snap, radius);
  ResortBundle bundle;
  bundle.name = name.empty() ? std::filesystem::path(geojson).stem().string() : name;
  bundle.graph = std::move(built.graph);
  bundle.repair = built.repair;
  save_bundle(bundle, o.out);

  const auto& r = built.repair;
  if (o.json()) {
    auto rejected = json::array();
    for (const auto& x : built.rejected) rejected.push_back({{"index", x.index}, {"id", x.id}, {"reason", x.reason}});
    print_json({{"out", o.out},
                {"nodes", bundle.graph.nodes.size()},
                {"edges", bundle.graph.edges.size()},
                {"rejected", rejected},
                {"repair_report", repair_report_json(r)}});
    return kOk;
  }
  std::cout << "resort " << bundle.name << ": " << bundle.graph.nodes.size() << " nodes, "
            << bundle.graph.edges.size() << " edges\n";
  for (const auto& x : built.rejected) std::cout << "rejected " << (x.id.empty() ? "#" + std::to_string(x.index) : x.id) << ": " << x.reason << "\n";
  std::cout << "dead ends " << r.dead_ends_before << " → " << r.dead_ends_after << ", helpers "
            << r.helper_edges_inserted << "\n";
  for (const auto& h : r.helpers) std::cout << fmt("  %s  %zu -> %zu  %.1f m\n", h.id.c_str(), h.from, h.to, h.length);
  std::cout << "wrote " << o.out << "\n";
  return kOk;
}

int cmd_trajectories(const Options& o) {
  auto bundle = load_bundle(o.bundle);
  const auto tracks = read_tracks_dir(o.tracks);
  const auto result = process_tracks(bundle.graph, tracks);
  augment_graph(bundle.graph, result);
  save_bundle(bundle, o.out);
  const auto& r = result.report;
  if (o.json()) {
    auto j = to_json(r);
    j["out"] = o.out;
    print_json(j);
    return kOk;
  }
  std::cout << "activities " << r.activities << ", accepted " << r.accepted << "\n";
  for (const auto& [reason, n] : r.rejected) std::cout << "  rejected " << reason << ": " << n << "\n";
  std::cout << "rides " << r.rides << ", matched " << r.matched_rides << ", discarded " << r.discarded_rides << "\n";
  std::cout << fmt("%-16s %8s %11s %9s  %s\n", "edge", "samples", "popularity", "time", "source");
  for (const auto& e : bundle.graph.edges) {
    if (e.is_helper()) continue;
    auto it = r.samples_per_edge.find(e.id);
    const std::size_t n = it == r.samples_per_edge.end() ? 0 : it->second;
    std::cout << fmt("%-16s %8zu %11.3f %9s  %s\n", e.id.c_str(), n, e.popularity.value_or(0.0),
                     e.median_travel_time ? fmt("%.0f s", *e.median_travel_time).c_str() : "-",
                     std::string(to_string(e.travel_time_source)).c_str());
  }
  std::cout << "wrote " << o.out << "\n";
  return kOk;
}

int cmd_validate(const Options& o) {
  const auto bundle = load_bundle(o.bundle);
  const auto q = validate(bundle.graph);
  if (o.json()) {
    print_json(to_json(q));
    return kOk;
  }
  std::cout << "resort " << bundle.name << "\n";
  std::cout << fmt("%-14s %10s %7s\n", "difficulty", "length km", "share");
  for (const auto& [d, len] : q.length_by_difficulty)
    std::cout << fmt("%-14s %10.2f %6.1f%%\n", std::string(to_string(d)).c_str(), len / 1000.0,
                     q.total_slope_length > 0 ? 100.0 * len / q.total_slope_length : 0.0);
  std::cout << fmt("%-14s %10.2f\n", "total", q.total_slope_length / 1000.0);
  std::cout << "dead ends " << q.dead_ends.size() << "\n";
  std::cout << "disconnected components " << q.disconnected_components.size() << "\n";
  for (const auto& c : q.disconnected_components) {
    std::cout << " ";
    for (const auto& id : c) std::cout << " " << id;
    std::cout << "\n";
  }
  std::cout << "edges missing attributes " << q.missing_attributes.size() << "\n";
  return kOk;
}

int cmd_rank(const Options& o, const PreferenceOptions& p, std::optional<std::size_t> limit) {
  const auto bundle = load_bundle(o.bundle);
  const auto prefs = p.load();
  prefs.require_active();
  const auto scores = score_and_rank(bundle.graph, prefs, limit);
  std::size_t slopes = 0;
  for (const auto& e : bundle.graph.edges) slopes += e.is_slope() ? 1 : 0;
  if (!limit && scores.size() < slopes)
    std::cerr << "warning: " << slopes - scores.size()
              << " slopes lack attributes this preference set needs and were left out\n";
  if (o.json()) {
    auto arr = json::array();
    for (const auto& s : scores) arr.push_back(to_json(s, bundle.graph));
    print_json({{"results", arr}});
    return kOk;
  }
  std::cout << fmt("%4s  %-12s %-20s %-13s %7s %8s\n", "rank", "id", "name", "difficulty", "S_pref", "cost");
  std::size_t rank = 0;
  for (const auto& s : scores) {
    const Edge* e = bundle.graph.find_edge(s.edge_id);
    std::cout << fmt("%4zu  %-12s %-20s %-13s %7.4f %8.4f\n", ++rank, s.edge_id.c_str(), e->name.c_str(),
                     std::string(to_string(e->difficulty)).c_str(), s.s_pref, s.cost);
  }
  return kOk;
}

void print_plan(const ResortGraph& g, const Plan& plan) {
  std::cout << fmt("%3s  %-12s %-20s %-8s %8s\n", "#", "edge", "name", "kind", "length");
  std::size_t i = 0;
  for (const auto& step : plan.route.steps) {
    const Edge* e = g.find_edge(step.edge_id);
    const bool fav = std::find(plan.favorites.begin(), plan.favorites.end(), e->id) != plan.favorites.end();
    std::cout << fmt("%3zu  %-12s %-20s %-8s %7.0fm%s%s\n", ++i, e->id.c_str(), e->name.c_str(),
                     std::string(to_string(e->kind)).c_str(), e->length(), step.reversed ? "  (reverse)" : "",
                     fav ? "  *" : "");
  }
  const auto& s = plan.summary;
  std::cout << fmt("descent %.0f m, length %.2f km, time %s, cost %.4f\n", s.vertical_descent, s.total_length / 1000.0,
                   duration_text(s.estimated_time).c_str(), plan.route.cost);
  auto shares = [](const char* label, const std::map<std::string, double>& m) {
    std::cout << label;
    for (const auto& [k, v] : m) std::cout << fmt("  %s %.1f%%", k.c_str(), 100.0 * v);
    std::cout << "\n";
  };
  shares("difficulty", s.difficulty_distribution);
  shares("steepness ", s.steepness_distribution);
  if (s.freeride_disclaimer) std::cout << "note: route includes freeride terrain; it is neither secured nor controlled\n";
}

int cmd_route(const Options& o, const PreferenceOptions& p, NodeId from, NodeId to, std::optional<double> duration,
              const std::vector<std::string>& favorites) {
  const auto bundle = load_bundle(o.bundle);
  const auto prefs = p.load();
  const auto& g = bundle.graph;
  for (NodeId n : {from, to})
    if (!g.has_node(n)) throw Error(ErrorCode::InvalidArgument, "unknown node " + std::to_string(n), "node");
  const auto cg = build_costed_graph(g, prefs);
  const Router router(cg);
  const Plan plan = duration ? plan_automated(router, from, to, *duration, prefs)
                             : plan_semi_automated(router, from, to, favorites);
  if (o.json()) {
    auto j = to_json(plan);
    j["mode"] = duration ? "auto" : "semi";
    j["warnings"] = cg.warnings;
    print_json(j);
    return kOk;
  }
  for (const auto& w : cg.warnings) std::cerr << "warning: " << w << "\n";
  print_plan(g, plan);
  return kOk;
}

GeoBBox parse_bbox(const std::string& text) {
  GeoBBox b;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf", &b.min_lon, &b.min_lat, &b.max_lon, &b.max_lat) != 4)
    throw CLI::ValidationError("--bbox", "expected west,south,east,north");
  return b;
}

int cmd_heatmap(const Options& o, const std::string& bbox, double cell, double bandwidth) {
  const auto bundle = load_bundle(o.bundle);
  const auto tracks = read_tracks_dir(o.tracks);
  const auto points = accepted_track_points(tracks);
  const GeoBBox box = bbox.empty() ? bundle.bbox() : parse_bbox(bbox);
  const auto raster = kde_raster(points, box, bandwidth, cell);
  write_georeferenced_png(raster, o.out);
  const auto world = std::filesystem::path(o.out).replace_extension(".pgw").string();
  if (o.json()) {
    print_json({{"out", o.out},
                {"world_file", world},
                {"points", points.size()},
                {"columns", raster.ncols},
                {"rows", raster.nrows},
                {"cell", raster.cell_size},
                {"mass", raster.raw_mass}});
    return kOk;
  }
  std::cout << "heatmap " << raster.ncols << "x" << raster.nrows << " cells from " << points.size() << " points\n";
  std::cout << "wrote " << o.out << " and " << world << "\n";
  return kOk;
}

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void stop_server(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const Options& o, const std::string& addr, const std::string& preset_dir, const std::string& cors,
              bool watch) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--addr", "expected HOST:PORT");
  const std::string host = addr.substr(0, colon);
  const int port = std::stoi(addr.substr(colon + 1));

  ServiceConfig cfg;
  cfg.cors_origin = cors;
  ResortService service(cfg);
  auto load = [&] {
    std::vector<GeoPoint> points;
    if (!o.tracks.empty()) points = accepted_track_points(read_tracks_dir(o.tracks));
    service.load(load_bundle(o.bundle), std::move(points));
  };
  load();
  service.set_presets(load_presets(preset_dir.empty() ? default_preset_dir() : std::filesystem::path(preset_dir)));

  httplib::Server server;
  service.mount(server);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);

  // Reload the bundle when the file changes; requests in flight keep the old snapshot.
  std::atomic<bool> running{true};
  std::thread watcher([&] {
    if (!watch) return;
    auto stamp = std::filesystem::last_write_time(o.bundle);
    while (running) {
      std::this_thread::sleep_for(std::chrono::seconds(1));
      std::error_code ec;
      const auto now = std::filesystem::last_write_time(o.bundle, ec);
      if (ec || now == stamp) continue;
      stamp = now;
      try {
        load();
        std::cerr << "reloaded " << o.bundle << "\n";
      } catch (const Error& e) {
        std::cerr << "reload failed, keeping previous bundle: " << e.what() << "\n";
      }
    }
  });

  if (!server.bind_to_port(host, port)) {
    running = false;
    watcher.join();
    throw Error(ErrorCode::Io, "cannot bind " + addr);
  }
  std::cerr << "serving " << o.bundle << " on http://" << addr << "\n";
  server.listen_after_bind();
  running = false;
  watcher.join();
  g_server = nullptr;
  return kOk;
}

int report(const Error& e, bool as_json) {
  if (as_json) {
    std::cerr << error_json(e).dump() << "\n";
  } else {
    std::cerr << "error: " << e.what();
    if (!e.subject().empty()) std::cerr << " [" << e.subject() << "]";
    std::cerr << "\n";
  }
  return e.code() == ErrorCode::Io ? kIo : kDomain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based ski route planning"};
  app.require_subcommand(1);
  Options o;

  // build
  std::string geojson, dem, name;
  double snap = kDefaultSnapTolerance, radius = kDefaultRepairRadius;
  auto* build = app.add_subcommand("build", "Build a resort bundle from slope/lift geometry and a DEM");
  build->add_option("--geojson", geojson, "GeoJSON or native feature file")->required();
  build->add_option("--dem", dem, "ESRI ASCII elevation grid")->required();
  build->add_option("--out", o.out, "Bundle to write")->required();
  build->add_option("--name", name, "Resort name (defaults to the input file stem)");
  build->add_option("--snap", snap, "Endpoint snap tolerance in meters");
  build->add_option("--repair-radius", radius, "Dead-end repair radius in meters");
  add_format(build, o);

  // trajectories
  auto* traj = app.add_subcommand("trajectories", "Derive popularity and travel times from GPS tracks");
  traj->add_option("--bundle", o.bundle, "Input bundle")->required()->envname("SKIROUTE_BUNDLE");
  traj->add_option("--tracks", o.tracks, "Directory of .gpx/.csv tracks")->required();
  traj->add_option("--out", o.out, "Bundle to write")->required();
  add_format(traj, o);

  // validate
  auto* val = app.add_subcommand("validate", "Report network quality");
  val->add_option("--bundle", o.bundle, "Bundle")->required()->envname("SKIROUTE_BUNDLE");
  add_format(val, o);

  // rank
  PreferenceOptions prefs;
  std::optional<std::size_t> limit;
  auto* rank = app.add_subcommand("rank", "List slopes best matching a preference set");
  rank->add_option("--bundle", o.bundle, "Bundle")->required()->envname("SKIROUTE_BUNDLE");
  rank->add_option("--limit", limit, "Maximum number of results");
  prefs.attach(rank);
  add_format(rank, o);

  // route
  NodeId from = 0, to = 0;
  std::optional<double> duration;
  std::vector<std::string> favorites;
  auto* route = app.add_subcommand("route", "Plan a route");
  route->add_option("--bundle", o.bundle, "Bundle")->required()->envname("SKIROUTE_BUNDLE");
  route->add_option("--from", from, "Start node")->required();
  route->add_option("--to", to, "End node")->required();
  auto* dur = route->add_option("--duration", duration, "Target duration in seconds (automated mode)");
  auto* fav = route->add_option("--favorites", favorites, "Favorite slope ids (semi-automated mode)")->delimiter(',');
  dur->excludes(fav);
  prefs.attach(route);
  add_format(route, o);

  // heatmap
  std::string bbox;
  double cell = 5.0, bandwidth = 15.0;
  auto* heat = app.add_subcommand("heatmap", "Render a track density heatmap");
  heat->add_option("--bundle", o.bundle, "Bundle")->required()->envname("SKIROUTE_BUNDLE");
  heat->add_option("--tracks", o.tracks, "Directory of .gpx/.csv tracks")->required();
  heat->add_option("--bbox", bbox, "west,south,east,north (defaults to the resort extent)");
  heat->add_option("--cell", cell, "Cell size in meters")->check(CLI::PositiveNumber);
  heat->add_option("--bandwidth", bandwidth, "Kernel bandwidth in meters")->check(CLI::PositiveNumber);
  heat->add_option("--out", o.out, "PNG to write (a .pgw world file is written next to it)")->required();
  add_format(heat, o);

  // serve
  std::string addr = "127.0.0.1:8080", preset_dir, cors = "*";
  bool watch = false;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--bundle", o.bundle, "Bundle")->required()->envname("SKIROUTE_BUNDLE");
  serve->add_option("--addr", addr, "Bind address HOST:PORT")->envname("SKIROUTE_ADDR");
  serve->add_option("--tracks", o.tracks, "Track directory for /api/heatmap")->envname("SKIROUTE_TRACKS");
  serve->add_option("--presets", preset_dir, "Preset directory")->envname("SKIROUTE_PRESETS");
  serve->add_option("--cors-origin", cors, "Access-Control-Allow-Origin value, empty to disable")
      ->envname("SKIROUTE_CORS_ORIGIN");
  serve->add_flag("--watch", watch, "Reload the bundle when the file changes");
  add_format(serve, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*build) return cmd_build(o, geojson, dem, name, snap, radius);
    if (*traj) return cmd_trajectories(o);
    if (*val) return cmd_validate(o);
    if (*rank) return cmd_rank(o, prefs, limit);
    if (*route) return cmd_route(o, prefs, from, to, duration, favorites);
    if (*heat) return cmd_heatmap(o, bbox, cell, bandwidth);
    if (*serve) return cmd_serve(o, addr, preset_dir, cors, watch);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const Error& e) {
    return report(e, o.json());
  } catch (const std::filesystem::filesystem_error& e) {
    return report(Error(ErrorCode::Io, e.what()), o.json());
  } catch (const std::exception& e) {
    return report(Error(ErrorCode::InvalidArgument, e.what()), o.json());
  }
  return kUsage;
}
