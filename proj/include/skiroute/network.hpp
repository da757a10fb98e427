#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "skiroute/elevation.hpp"
#include "skiroute/error.hpp"
#include "skiroute/geo.hpp"
#include "skiroute/model.hpp"
#include "skiroute/segmentation.hpp"

namespace skiroute {

inline constexpr double kDefaultSnapTolerance = 1.0;
inline constexpr double kDefaultRepairRadius = 30.0;

/// One slope or lift as it comes out of the geodata source. Tags use OSM keys
/// (piste:difficulty, piste:grooming, aerialway, name, ref, oneway, ...).
struct RawFeature {
  std::string id;
  std::string kind;  // "slope", "lift", anything else is rejected
  Polyline geometry;
  std::map<std::string, std::string> tags;
};

struct Rejection {
  std::size_t index = 0;
  std::string id;
  std::string reason;
};

struct IngestResult {
  std::vector<Edge> edges;
  std::vector<Rejection> rejected;
};

struct HelperEdgeInfo {
  std::string id;
  NodeId from = 0;
  NodeId to = 0;
  double length = 0.0;
};

struct RepairReport {
  std::size_t dead_ends_before = 0;
  std::size_t dead_ends_after = 0;
  std::size_t helper_edges_inserted = 0;
  std::vector<HelperEdgeInfo> helpers;
};

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::optional<std::string> tag(const RawFeature& f, const std::string& key) {
  auto it = f.tags.find(key);
  if (it == f.tags.end() || it->second.empty()) return std::nullopt;
  return lower(it->second);
}

inline std::optional<Difficulty> map_difficulty(const std::string& v) {
  if (v == "novice" || v == "easy") return Difficulty::easy;
  if (v == "intermediate") return Difficulty::intermediate;
  if (v == "advanced" || v == "expert") return Difficulty::advanced;
  if (v == "freeride" || v == "extreme") return Difficulty::freeride;
  return std::nullopt;
}

inline bool map_groomed(const std::string& v) {
  static const std::set<std::string> ungroomed{"mogul", "backcountry", "no", "none", "ungroomed", "false"};
  return ungroomed.count(v) == 0;
}

inline std::optional<LiftType> map_lift_type(const std::string& v) {
  static const std::map<std::string, LiftType> table{
      {"t-bar", LiftType::t_bar},     {"t_bar", LiftType::t_bar},         {"j-bar", LiftType::t_bar},
      {"platter", LiftType::t_bar},   {"drag_lift", LiftType::t_bar},     {"rope_tow", LiftType::t_bar},
      {"magic_carpet", LiftType::t_bar}, {"chair_lift", LiftType::chair}, {"chair", LiftType::chair},
      {"gondola", LiftType::gondola}, {"mixed_lift", LiftType::gondola},  {"cable_car", LiftType::cable_car},
  };
  auto it = table.find(v);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline std::optional<double> endpoint_elevation(const GeoPoint& p, const ElevationGrid* grid) {
  if (p.ele) return p.ele;
  if (!grid) return std::nullopt;
  try {
    return sample_elevation(*grid, p);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Normalizes tags and orients geometry. Features that cannot become edges are
/// collected in `rejected`; ingestion itself never fails.
inline IngestResult ingest(const std::vector<RawFeature>& features, const ElevationGrid* grid = nullptr) {
  IngestResult result;
  std::set<std::string> used_ids;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const RawFeature& f = features[i];
    auto reject = [&](std::string reason) { result.rejected.push_back({i, f.id, std::move(reason)}); };

    if (f.geometry.size() < 2) {
      reject("bad geometry: fewer than 2 points");
      continue;
    }
    if (!std::all_of(f.geometry.begin(), f.geometry.end(), [](const GeoPoint& p) { return p.valid(); })) {
      reject("bad geometry: coordinate out of range");
      continue;
    }
    if (!(polyline_length(f.geometry) > 0.0)) {
      reject("bad geometry: zero length");
      continue;
    }

    Edge e;
    if (f.kind == "slope") {
      e.kind = EdgeKind::slope;
      if (auto d = detail::tag(f, "piste:difficulty"); d && detail::map_difficulty(*d)) {
        e.difficulty = *detail::map_difficulty(*d);
        e.difficulty_declared = true;
      }
      if (auto g = detail::tag(f, "piste:grooming")) e.groomed = detail::map_groomed(*g);
    } else if (f.kind == "lift") {
      e.kind = EdgeKind::lift;
      auto type_tag = detail::tag(f, "aerialway");
      auto type = type_tag ? detail::map_lift_type(*type_tag) : std::optional<LiftType>{LiftType::chair};
      if (!type) {
        reject("unknown lift type: " + *type_tag);
        continue;
      }
      e.lift_type = *type;
      e.bidirectional = detail::tag(f, "oneway") == std::optional<std::string>{"no"};
      e.amenities.heated_seats = detail::tag(f, "aerialway:heating") == std::optional<std::string>{"yes"};
      e.amenities.bubble = detail::tag(f, "aerialway:bubble") == std::optional<std::string>{"yes"};
      if (auto occ = detail::tag(f, "aerialway:occupancy")) {
        try {
          e.amenities.occupancy = std::stoi(*occ);
        } catch (const std::exception&) {
          e.amenities.occupancy = 0;
        }
      }
    } else {
      reject("unknown kind: " + (f.kind.empty() ? std::string("<none>") : f.kind));
      continue;
    }

    if (auto it = f.tags.find("name"); it != f.tags.end()) e.name = it->second;
    if (auto it = f.tags.find("ref"); it != f.tags.end()) e.ref = it->second;

    std::string id = f.id.empty() ? std::string(to_string(e.kind)) + "-" + std::to_string(i) : f.id;
    if (used_ids.count(id)) {
      std::size_t n = 2;
      while (used_ids.count(id + "#" + std::to_string(n))) ++n;
      id += "#" + std::to_string(n);
    }
    used_ids.insert(id);
    e.id = id;

    e.geometry = f.geometry;
    const auto first = detail::endpoint_elevation(e.geometry.front(), grid);
    const auto last = detail::endpoint_elevation(e.geometry.back(), grid);
    if (first && last) {
      // slopes run downhill, lifts uphill
      const bool reverse = e.is_slope() ? *first < *last : *first > *last;
      if (reverse) std::reverse(e.geometry.begin(), e.geometry.end());
    }
    result.edges.push_back(std::move(e));
  }
  return result;
}

/// Collapses endpoints within `snap_tolerance` meters into shared junction
/// nodes. Node ids are assigned by sorted (lon, lat) so the result does not
/// depend on the input edge order.
inline ResortGraph build_topology(std::vector<Edge> edges, double snap_tolerance = kDefaultSnapTolerance) {
  const std::size_t n = edges.size() * 2;
  std::vector<GeoPoint> ends(n);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    ends[2 * i] = edges[i].geometry.front();
    ends[2 * i + 1] = edges[i].geometry.back();
  }

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (distance(ends[a], ends[b]) <= snap_tolerance) {
        const auto ra = find(a);
        const auto rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }

  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters[find(i)].push_back(i);

  struct Cluster {
    GeoPoint position;
    std::optional<double> elevation;
    std::vector<std::size_t> members;
  };
  std::vector<Cluster> nodes;
  for (auto& [root, members] : clusters) {
    std::vector<GeoPoint> pts;
    for (auto m : members) pts.push_back(ends[m]);
    std::sort(pts.begin(), pts.end(), [](const GeoPoint& a, const GeoPoint& b) {
      return std::tie(a.lon, a.lat) < std::tie(b.lon, b.lat);
    });
    Cluster c;
    double lon = 0.0, lat = 0.0, ele = 0.0;
    std::size_t with_ele = 0;
    for (const auto& p : pts) {
      lon += p.lon;
      lat += p.lat;
      if (p.ele) {
        ele += *p.ele;
        ++with_ele;
      }
    }
    c.position = {lon / static_cast<double>(pts.size()), lat / static_cast<double>(pts.size()), std::nullopt};
    if (with_ele) c.elevation = ele / static_cast<double>(with_ele);
    c.members = members;
    nodes.push_back(std::move(c));
  }
  std::sort(nodes.begin(), nodes.end(), [](const Cluster& a, const Cluster& b) {
    return std::tie(a.position.lon, a.position.lat) < std::tie(b.position.lon, b.position.lat);
  });

  ResortGraph g;
  g.nodes.resize(nodes.size());
  for (NodeId id = 0; id < nodes.size(); ++id) {
    g.nodes[id] = {id, nodes[id].position, nodes[id].elevation};
    for (auto m : nodes[id].members) {
      Edge& e = edges[m / 2];
      (m % 2 == 0 ? e.from : e.to) = id;
    }
  }
  g.edges = std::move(edges);
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
  return g;
}

/// Fills node elevations from the DEM where they are still unknown.
inline void sample_node_elevations(ResortGraph& g, const ElevationGrid& grid) {
  for (auto& node : g.nodes) {
    if (node.elevation) continue;
    try {
      node.elevation = sample_elevation(grid, node.position);
    } catch (const Error&) {
    }
  }
}

/// Links degree-1 nodes to the nearest not-yet-connected node within `radius`
/// using bidirectional helper connectors. Candidate pairs are processed by
/// ascending gap; each dead end initiates at most one helper.
inline RepairReport repair_connectivity(ResortGraph& g, double radius = kDefaultRepairRadius,
                                        const ElevationGrid* grid = nullptr) {
  RepairReport report;
  const auto dead = g.dead_ends();
  report.dead_ends_before = dead.size();

  std::set<std::pair<NodeId, NodeId>> connected;
  for (const auto& e : g.edges) {
    connected.insert({e.from, e.to});
    connected.insert({e.to, e.from});
  }

  struct Candidate {
    double gap;
    NodeId dead_end;
    NodeId other;
  };
  std::vector<Candidate> candidates;
  for (NodeId d : dead)
    for (const auto& node : g.nodes) {
      if (node.id == d || connected.count({d, node.id})) continue;
      const double gap = distance(g.nodes[d].position, node.position);
      if (gap <= radius) candidates.push_back({gap, d, node.id});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.gap, a.dead_end, a.other) < std::tie(b.gap, b.dead_end, b.other);
  });

  std::set<NodeId> resolved;
  std::size_t next = g.helper_count() + 1;
  for (const auto& c : candidates) {
    if (resolved.count(c.dead_end) || connected.count({c.dead_end, c.other})) continue;
    Edge h;
    while (g.find_edge("helper-" + std::to_string(next))) ++next;
    h.id = "helper-" + std::to_string(next++);
    h.kind = EdgeKind::helper;
    h.name = "connector";
    h.geometry = {g.nodes[c.dead_end].position, g.nodes[c.other].position};
    h.from = c.dead_end;
    h.to = c.other;
    h.travel_time_source = TravelTimeSource::nominal;
    if (c.gap > 0.0) {
      if (grid) {
        attribute_edge(h, *grid);
      } else {
        h.subsegments = segmentize(h.geometry);
        const auto& a = g.nodes[c.dead_end].elevation;
        const auto& b = g.nodes[c.other].elevation;
        for (auto& s : h.subsegments) {
          s.compass = compass_from_bearing(bearing(s.start, s.end));
          s.steepness = (a && b) ? 100.0 * (*a - *b) / c.gap : 0.0;
          s.altitude = (a && b) ? (*a + *b) / 2.0 : 0.0;
          s.attributed = true;
        }
      }
    }
    report.helpers.push_back({h.id, h.from, h.to, c.gap});
    connected.insert({c.dead_end, c.other});
    connected.insert({c.other, c.dead_end});
    resolved.insert(c.dead_end);
    if (std::binary_search(dead.begin(), dead.end(), c.other)) resolved.insert(c.other);
    g.edges.push_back(std::move(h));
  }
  report.helper_edges_inserted = report.helpers.size();
  report.dead_ends_after = g.dead_ends().size();
  return report;
}

struct QualityReport {
  std::map<Difficulty, double> length_by_difficulty;  // meters, slopes only
  double total_slope_length = 0.0;
  std::vector<NodeId> dead_ends;
  // every weakly connected component except the largest, as sorted edge ids
  std::vector<std::vector<std::string>> disconnected_components;
  std::vector<std::string> missing_attributes;
};

inline QualityReport validate(const ResortGraph& g) {
  QualityReport q;
  for (Difficulty d : kDifficulties) q.length_by_difficulty[d] = 0.0;
  for (const auto& e : g.edges) {
    if (e.is_slope()) {
      const double len = e.length();
      q.length_by_difficulty[e.difficulty] += len;
      q.total_slope_length += len;
    }
    if (!e.fully_attributed()) q.missing_attributes.push_back(e.id);
  }
  q.dead_ends = g.dead_ends();

  const auto comps = weak_components(g);
  std::vector<std::size_t> component_of(g.nodes.size(), 0);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (NodeId n : comps[c]) component_of[n] = c;
  std::vector<std::vector<std::string>> edges_by_comp(comps.size());
  for (const auto& e : g.edges) edges_by_comp[component_of[e.from]].push_back(e.id);
  for (std::size_t c = 1; c < comps.size(); ++c) {
    auto ids = edges_by_comp[c];
    std::sort(ids.begin(), ids.end());
    q.disconnected_components.push_back(std::move(ids));
  }
  return q;
}

struct BuildResult {
  ResortGraph graph;
  std::vector<Rejection> rejected;
  RepairReport repair;
};

/// Ingest, topology, connectivity repair and DEM attribution in one pass.
inline BuildResult build_resort(const std::vector<RawFeature>& features, const ElevationGrid& grid,
                                double snap_tolerance = kDefaultSnapTolerance,
                                double repair_radius = kDefaultRepairRadius) {
  BuildResult out;
  auto ingested = ingest(features, &grid);
  out.rejected = std::move(ingested.rejected);
  out.graph = build_topology(std::move(ingested.edges), snap_tolerance);
  sample_node_elevations(out.graph, grid);
  out.repair = repair_connectivity(out.graph, repair_radius, &grid);
  for (auto& e : out.graph.edges)
    if (!e.is_helper() || e.subsegments.empty()) attribute_edge(e, grid);
  return out;
}

// ---------------------------------------------------------------------------
// Feature file parsing

namespace detail {

inline Polyline parse_coordinates(const nlohmann::json& coords) {
  Polyline line;
  if (!coords.is_array()) return line;
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) return {};
    GeoPoint p{c[0].get<double>(), c[1].get<double>(), std::nullopt};
    if (c.size() > 2 && c[2].is_number()) p.ele = c[2].get<double>();
    line.push_back(p);
  }
  return line;
}

inline std::string scalar_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream os;
    os << v.get<double>();
    return os.str();
  }
  return {};
}

}  // namespace detail

/// GeoJSON FeatureCollection of LineStrings with OSM piste/aerialway tags.
inline std::vector<RawFeature> parse_geojson_features(const nlohmann::json& doc) {
  std::vector<RawFeature> out;
  for (const auto& feature : doc.value("features", nlohmann::json::array())) {
    RawFeature f;
    const auto props = feature.value("properties", nlohmann::json::object());
    for (auto it = props.begin(); it != props.end(); ++it) {
      const std::string v = detail::scalar_string(it.value());
      if (!v.empty()) f.tags[it.key()] = v;
    }
    if (feature.contains("id")) f.id = detail::scalar_string(feature["id"]);
    for (const char* key : {"id", "@id", "osm_id"})
      if (f.id.empty() && f.tags.count(key)) f.id = f.tags[key];

    const auto geom = feature.value("geometry", nlohmann::json::object());
    if (geom.value("type", "") == "LineString") f.geometry = detail::parse_coordinates(geom.value("coordinates", nlohmann::json()));

    if (f.tags.count("piste:type")) {
      f.kind = detail::lower(f.tags["piste:type"]) == "downhill" ? "slope" : "piste:" + f.tags["piste:type"];
    } else if (f.tags.count("aerialway")) {
      f.kind = "lift";
    }
    out.push_back(std::move(f));
  }
  return out;
}

/// Simplified fixture schema:
///   {"features": [{"id", "kind": "slope"|"lift", "coordinates": [[lon, lat, ele?], ...],
///                  "tags": {"difficulty", "grooming", "lift_type", "oneway", "name", "ref"}}]}
/// Native tag names are mapped onto their OSM equivalents.
inline std::vector<RawFeature> parse_native_features(const nlohmann::json& doc) {
  static const std::map<std::string, std::string> rename{
      {"difficulty", "piste:difficulty"}, {"grooming", "piste:grooming"}, {"lift_type", "aerialway"},
      {"heated_seats", "aerialway:heating"}, {"bubble", "aerialway:bubble"}, {"occupancy", "aerialway:occupancy"}};
  std::vector<RawFeature> out;
  for (const auto& item : doc.value("features", nlohmann::json::array())) {
    RawFeature f;
    f.id = item.contains("id") ? detail::scalar_string(item["id"]) : "";
    f.kind = item.value("kind", "");
    f.geometry = detail::parse_coordinates(item.value("coordinates", nlohmann::json()));
    const auto tags = item.value("tags", nlohmann::json::object());
    for (auto it = tags.begin(); it != tags.end(); ++it) {
      auto r = rename.find(it.key());
      f.tags[r == rename.end() ? it.key() : r->second] = detail::scalar_string(it.value());
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline std::vector<RawFeature> parse_features(const nlohmann::json& doc) {
  if (doc.value("type", "") == "FeatureCollection") return parse_geojson_features(doc);
  return parse_native_features(doc);
}

inline std::vector<RawFeature> read_features_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return parse_features(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

}  // namespace skiroute
