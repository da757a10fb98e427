#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "skiroute/bundle.hpp"
#include "skiroute/preference.hpp"
#include "skiroute/raster_io.hpp"
#include "skiroute/routing.hpp"
#include "skiroute/trajectory.hpp"
#include "skiroute/wire.hpp"

namespace skiroute {

inline constexpr const char* kServiceVersion = "0.1.0";

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

struct ServiceConfig {
  std::string cors_origin = "*";
  double heatmap_bandwidth = 15.0;
};

/// HTTP facade over an immutable resort snapshot. `handle` is the whole API and
/// is usable without a socket; `mount` wires it into an httplib server.
class ResortService {
 public:
  struct Snapshot {
    ResortBundle bundle;
    std::vector<GeoPoint> track_points;
  };

  explicit ResortService(ServiceConfig cfg = {}) : cfg_(std::move(cfg)) {}

  void load(ResortBundle bundle, std::vector<GeoPoint> track_points = {}) {
    auto next = std::make_shared<const Snapshot>(Snapshot{std::move(bundle), std::move(track_points)});
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(next);
  }

  void set_presets(std::map<std::string, PreferenceSet> presets) {
    auto next = std::make_shared<const std::map<std::string, PreferenceSet>>(std::move(presets));
    std::lock_guard lock(mutex_);
    presets_ = std::move(next);
  }

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
  }

  Response handle(const Request& req) const {
    try {
      return dispatch(req);
    } catch (const Error& e) {
      return error(status_for(e.code()), e);
    } catch (const nlohmann::json::exception& e) {
      return error(400, Error(ErrorCode::ParseError, e.what(), "body"));
    }
  }

  void mount(httplib::Server& server) const {
    auto bridge = [this](const httplib::Request& in, httplib::Response& out) {
      Request req{in.method, in.path, {}, in.body};
      for (const auto& [k, v] : in.params) req.query.emplace(k, v);
      const auto res = handle(req);
      out.status = res.status;
      out.set_content(res.body, res.content_type);
      add_cors(out);
    };
    server.Get(".*", bridge);
    server.Post(".*", bridge);
    server.Options(".*", [this](const httplib::Request&, httplib::Response& out) {
      out.status = 204;
      add_cors(out);
    });
  }

  static int status_for(ErrorCode code) {
    switch (code) {
      case ErrorCode::InvalidArgument:
      case ErrorCode::ParseError:
        return 400;
      case ErrorCode::Unreachable:
      case ErrorCode::UnreachableFavorite:
      case ErrorCode::InfeasibleDuration:
      case ErrorCode::EmptyPlan:
      case ErrorCode::MissingAttribute:
        return 422;
      case ErrorCode::EmptyRegion:
      case ErrorCode::NoData:
        return 404;
      default:
        return 500;
    }
  }

 private:
  ServiceConfig cfg_;
  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::shared_ptr<const std::map<std::string, PreferenceSet>> presets_ =
      std::make_shared<const std::map<std::string, PreferenceSet>>();

  void add_cors(httplib::Response& out) const {
    if (cfg_.cors_origin.empty()) return;
    out.set_header("Access-Control-Allow-Origin", cfg_.cors_origin);
    out.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    out.set_header("Access-Control-Allow-Headers", "Content-Type");
  }

  static Response ok(const nlohmann::json& j) { return {200, "application/json", j.dump()}; }

  static Response error(int status, const Error& e) { return {status, "application/json", error_json(e).dump()}; }

  static Response not_found(const std::string& what, const std::string& subject) {
    return {404, "application/json",
            nlohmann::json{{"error", "NotFound"}, {"message", what}, {"field", subject}}.dump()};
  }

  Response dispatch(const Request& req) const {
    const auto& p = req.path;
    if (req.method == "GET" && p == "/api/health") return health();

    const bool known = p == "/api/resort" || p == "/api/rank" || p == "/api/route" || p == "/api/heatmap" ||
                       p.rfind("/api/slopes/", 0) == 0;
    if (!known) return not_found("no such endpoint", p);
    auto snap = snapshot();
    if (!snap) return {503, "application/json", R"({"error":"Unavailable","message":"bundle not loaded"})"};
    const auto& g = snap->bundle.graph;

    if (req.method == "GET" && p == "/api/resort") return ok(resort_geojson(g));
    if (req.method == "GET" && p.rfind("/api/slopes/", 0) == 0) {
      const std::string id = p.substr(std::string("/api/slopes/").size());
      const Edge* e = g.find_edge(id);
      if (!e) return not_found("unknown edge", id);
      return ok(slope_json(*e));
    }
    if (req.method == "POST" && p == "/api/rank") return rank(g, parse_body(req));
    if (req.method == "POST" && p == "/api/route") return route(g, parse_body(req));
    if (req.method == "GET" && p == "/api/heatmap") return heatmap(*snap, req);
    return {405, "application/json", R"({"error":"MethodNotAllowed","message":"method not allowed"})"};
  }

  Response health() const {
    auto snap = snapshot();
    nlohmann::json j{{"status", "ok"},
                     {"version", kServiceVersion},
                     {"format_version", kBundleFormatVersion},
                     {"bundle_loaded", static_cast<bool>(snap)}};
    if (snap) {
      j["resort"] = snap->bundle.name;
      j["nodes"] = snap->bundle.graph.nodes.size();
      j["edges"] = snap->bundle.graph.edges.size();
      j["tracks_loaded"] = !snap->track_points.empty();
    }
    return ok(j);
  }

  static nlohmann::json parse_body(const Request& req) {
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object", "body");
      return j;
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "malformed JSON at byte " + std::to_string(e.byte), "body");
    }
  }

  PreferenceSet preferences_of(const nlohmann::json& body) const {
    PreferenceSet prefs;
    if (body.contains("preferences")) {
      prefs = preference_set_from_json(body["preferences"]);
    } else if (body.contains("preset")) {
      if (!body["preset"].is_string()) throw Error(ErrorCode::InvalidArgument, "preset must be a string", "preset");
      std::shared_ptr<const std::map<std::string, PreferenceSet>> presets;
      {
        std::lock_guard lock(mutex_);
        presets = presets_;
      }
      const auto name = body["preset"].get<std::string>();
      auto it = presets->find(name);
      if (it == presets->end()) throw Error(ErrorCode::InvalidArgument, "unknown preset '" + name + "'", "preset");
      prefs = it->second;
    } else {
      throw Error(ErrorCode::InvalidArgument, "preferences or preset required", "preferences");
    }
    prefs.require_active();
    return prefs;
  }

  Response rank(const ResortGraph& g, const nlohmann::json& body) const {
    const auto prefs = preferences_of(body);
    std::optional<std::size_t> limit;
    if (body.contains("limit") && !body["limit"].is_null()) {
      if (!body["limit"].is_number_integer() || body["limit"].get<long long>() < 0)
        throw Error(ErrorCode::InvalidArgument, "limit must be a non-negative integer", "limit");
      limit = body["limit"].get<std::size_t>();
    }
    auto results = nlohmann::json::array();
    for (const auto& s : score_and_rank(g, prefs, limit)) results.push_back(to_json(s, g));
    return ok({{"results", results}});
  }

  static std::optional<NodeId> node_field(const nlohmann::json& body, const char* key) {
    if (!body.contains(key)) throw Error(ErrorCode::InvalidArgument, std::string(key) + " is required", key);
    const auto& v = body[key];
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be a node id", key);
    return v.get<NodeId>();
  }

  Response route(const ResortGraph& g, const nlohmann::json& body) const {
    const std::string mode = body.value("mode", "");
    if (mode != "auto" && mode != "semi") throw Error(ErrorCode::InvalidArgument, "mode must be auto or semi", "mode");
    const NodeId start = *node_field(body, "start_node");
    const NodeId end = *node_field(body, "end_node");
    std::vector<std::string> favorites;
    double duration = 0.0;
    if (mode == "auto") {
      if (!body.contains("duration") || !body["duration"].is_number() || !(body["duration"].get<double>() > 0.0))
        throw Error(ErrorCode::InvalidArgument, "duration must be a positive number of seconds", "duration");
      duration = body["duration"].get<double>();
    } else if (body.contains("favorites")) {
      if (!body["favorites"].is_array()) throw Error(ErrorCode::InvalidArgument, "favorites must be an array", "favorites");
      for (const auto& f : body["favorites"]) {
        if (!f.is_string()) throw Error(ErrorCode::InvalidArgument, "favorite ids must be strings", "favorites");
        favorites.push_back(f.get<std::string>());
      }
    }
    const auto prefs = preferences_of(body);

    if (!g.has_node(start)) return not_found("unknown node", std::to_string(start));
    if (!g.has_node(end)) return not_found("unknown node", std::to_string(end));
    for (const auto& f : favorites) {
      const Edge* e = g.find_edge(f);
      if (!e) return not_found("unknown edge", f);
      if (!e->is_slope()) throw Error(ErrorCode::InvalidArgument, "favorite '" + f + "' is not a slope", "favorites");
    }

    const auto cg = build_costed_graph(g, prefs);
    const Router router(cg);
    const Plan plan = mode == "auto" ? plan_automated(router, start, end, duration, prefs)
                                     : plan_semi_automated(router, start, end, favorites);
    auto j = to_json(plan);
    j["mode"] = mode;
    j["warnings"] = cg.warnings;
    return ok(j);
  }

  Response heatmap(const Snapshot& snap, const Request& req) const {
    if (snap.track_points.empty()) return not_found("no trajectory data loaded", "tracks");
    GeoBBox box;
    if (auto it = req.query.find("bbox"); it != req.query.end()) {
      double v[4];
      if (std::sscanf(it->second.c_str(), "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]) != 4)
        throw Error(ErrorCode::InvalidArgument, "bbox must be west,south,east,north", "bbox");
      box = {v[0], v[1], v[2], v[3]};
    } else {
      box = snap.bundle.bbox();
    }
    if (!box.valid()) throw Error(ErrorCode::InvalidArgument, "bbox is empty", "bbox");
    double cell = 5.0;
    if (auto it = req.query.find("cell"); it != req.query.end()) {
      try {
        cell = std::stod(it->second);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "cell must be a number of meters", "cell");
      }
      if (!(cell > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell must be positive", "cell");
    }
    const double mid = (box.min_lat + box.max_lat) / 2.0;
    const double w = distance({box.min_lon, mid, std::nullopt}, {box.max_lon, mid, std::nullopt});
    const double h = distance({box.min_lon, box.min_lat, std::nullopt}, {box.min_lon, box.max_lat, std::nullopt});
    if ((w / cell) * (h / cell) > 16e6) throw Error(ErrorCode::InvalidArgument, "raster too large, increase cell", "cell");
    const auto raster = kde_raster(snap.track_points, box, cfg_.heatmap_bandwidth, cell);
    return {200, "image/png", encode_png(raster)};
  }
};

/// Positions of every accepted activity, for the heatmap endpoint.
inline std::vector<GeoPoint> accepted_track_points(std::span<const ActivityTrack> tracks,
                                                   const TrajectoryConfig& cfg = {}) {
  std::vector<GeoPoint> out;
  for (const auto& t : tracks) {
    if (!filter_activity(t, cfg).accepted) continue;
    for (const auto& p : t.points) out.push_back(p.position);
  }
  return out;
}

}  // namespace skiroute
