#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "skiroute/error.hpp"
#include "skiroute/model.hpp"
#include "skiroute/network.hpp"
#include "skiroute/trajectory.hpp"

namespace skiroute {

inline constexpr int kBundleFormatVersion = 1;

/// Preprocessed resort: attributed graph plus the repair report. Serialized as
/// versioned JSON with a CRC-32 over the canonical body.
struct ResortBundle {
  int format_version = kBundleFormatVersion;
  std::string name;
  ResortGraph graph;
  RepairReport repair;

  GeoBBox bbox() const {
    GeoBBox b{180.0, 90.0, -180.0, -90.0};
    auto grow = [&](const GeoPoint& p) {
      b.min_lon = std::min(b.min_lon, p.lon);
      b.min_lat = std::min(b.min_lat, p.lat);
      b.max_lon = std::max(b.max_lon, p.lon);
      b.max_lat = std::max(b.max_lat, p.lat);
    };
    for (const auto& n : graph.nodes) grow(n.position);
    for (const auto& e : graph.edges)
      for (const auto& p : e.geometry) grow(p);
    if (!b.valid()) return {};
    return b;
  }
};

namespace detail {

using nlohmann::json;

inline json point_json(const GeoPoint& p) {
  json j = json::array({p.lon, p.lat});
  if (p.ele) j.push_back(*p.ele);
  return j;
}

inline GeoPoint point_from(const json& j) {
  GeoPoint p{j.at(0).get<double>(), j.at(1).get<double>(), std::nullopt};
  if (j.size() > 2 && !j.at(2).is_null()) p.ele = j.at(2).get<double>();
  return p;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

template <typename Enum>
Enum enum_from(const json& j, const char* key, std::optional<Enum> (*parse)(std::string_view)) {
  const auto text = j.at(key).get<std::string>();
  auto v = parse(text);
  if (!v) throw Error(ErrorCode::ParseError, std::string("bad value '") + text + "' for " + key);
  return *v;
}

inline json subsegment_json(const SubSegment& s) {
  return {{"index", s.index},       {"start", point_json(s.start)},   {"end", point_json(s.end)},
          {"mid", point_json(s.mid)}, {"length", s.length},           {"altitude", s.altitude},
          {"steepness", s.steepness}, {"compass", to_string(s.compass)}, {"attributed", s.attributed}};
}

inline SubSegment subsegment_from(const json& j) {
  SubSegment s;
  s.index = j.at("index").get<std::size_t>();
  s.start = point_from(j.at("start"));
  s.end = point_from(j.at("end"));
  s.mid = point_from(j.at("mid"));
  s.length = j.at("length").get<double>();
  s.altitude = j.at("altitude").get<double>();
  s.steepness = j.at("steepness").get<double>();
  s.compass = enum_from<Compass>(j, "compass", parse_compass);
  s.attributed = j.at("attributed").get<bool>();
  return s;
}

}  // namespace detail

inline nlohmann::json edge_to_json(const Edge& e) {
  using detail::json;
  json j{{"id", e.id},
         {"kind", to_string(e.kind)},
         {"name", e.name},
         {"ref", e.ref},
         {"from", e.from},
         {"to", e.to},
         {"popularity", detail::optional_json(e.popularity)},
         {"median_travel_time", detail::optional_json(e.median_travel_time)},
         {"travel_time_source", to_string(e.travel_time_source)}};
  auto geom = json::array();
  for (const auto& p : e.geometry) geom.push_back(detail::point_json(p));
  j["geometry"] = geom;
  if (e.is_slope()) {
    j["difficulty"] = to_string(e.difficulty);
    j["difficulty_declared"] = e.difficulty_declared;
    j["groomed"] = e.groomed;
  }
  if (e.is_lift()) {
    j["lift_type"] = to_string(e.lift_type);
    j["bidirectional"] = e.bidirectional;
    j["amenities"] = {{"heated_seats", e.amenities.heated_seats},
                      {"bubble", e.amenities.bubble},
                      {"occupancy", e.amenities.occupancy}};
  }
  auto segs = json::array();
  for (const auto& s : e.subsegments) segs.push_back(detail::subsegment_json(s));
  j["subsegments"] = segs;
  return j;
}

inline Edge edge_from_json(const nlohmann::json& j) {
  Edge e;
  e.id = j.at("id").get<std::string>();
  e.kind = detail::enum_from<EdgeKind>(j, "kind", parse_edge_kind);
  e.name = j.at("name").get<std::string>();
  e.ref = j.at("ref").get<std::string>();
  e.from = j.at("from").get<NodeId>();
  e.to = j.at("to").get<NodeId>();
  e.popularity = detail::optional_from<double>(j, "popularity");
  e.median_travel_time = detail::optional_from<double>(j, "median_travel_time");
  e.travel_time_source = detail::enum_from<TravelTimeSource>(j, "travel_time_source", parse_travel_time_source);
  for (const auto& p : j.at("geometry")) e.geometry.push_back(detail::point_from(p));
  if (e.is_slope()) {
    e.difficulty = detail::enum_from<Difficulty>(j, "difficulty", parse_difficulty);
    e.difficulty_declared = j.at("difficulty_declared").get<bool>();
    e.groomed = j.at("groomed").get<bool>();
  }
  if (e.is_lift()) {
    e.lift_type = detail::enum_from<LiftType>(j, "lift_type", parse_lift_type);
    e.bidirectional = j.at("bidirectional").get<bool>();
    const auto& a = j.at("amenities");
    e.amenities = {a.at("heated_seats").get<bool>(), a.at("bubble").get<bool>(), a.at("occupancy").get<int>()};
  }
  for (const auto& s : j.at("subsegments")) e.subsegments.push_back(detail::subsegment_from(s));
  return e;
}

inline nlohmann::json repair_report_json(const RepairReport& r) {
  auto helpers = nlohmann::json::array();
  for (const auto& h : r.helpers) helpers.push_back({{"id", h.id}, {"from", h.from}, {"to", h.to}, {"length", h.length}});
  return {{"dead_ends_before", r.dead_ends_before},
          {"dead_ends_after", r.dead_ends_after},
          {"helper_edges_inserted", r.helper_edges_inserted},
          {"helpers", helpers}};
}

inline RepairReport repair_report_from_json(const nlohmann::json& j) {
  RepairReport r;
  r.dead_ends_before = j.at("dead_ends_before").get<std::size_t>();
  r.dead_ends_after = j.at("dead_ends_after").get<std::size_t>();
  r.helper_edges_inserted = j.at("helper_edges_inserted").get<std::size_t>();
  for (const auto& h : j.at("helpers"))
    r.helpers.push_back({h.at("id").get<std::string>(), h.at("from").get<NodeId>(), h.at("to").get<NodeId>(),
                         h.at("length").get<double>()});
  return r;
}

namespace detail {

inline nlohmann::json bundle_body(const ResortBundle& b) {
  using nlohmann::json;
  const auto box = b.bbox();
  auto nodes = json::array();
  for (const auto& n : b.graph.nodes)
    nodes.push_back({{"id", n.id}, {"position", point_json(n.position)}, {"elevation", optional_json(n.elevation)}});
  auto edges = json::array();
  for (const auto& e : b.graph.edges) edges.push_back(edge_to_json(e));
  return {{"format_version", b.format_version},
          {"resort", {{"name", b.name}, {"bbox", {box.min_lon, box.min_lat, box.max_lon, box.max_lat}}}},
          {"nodes", nodes},
          {"edges", edges},
          {"repair_report", repair_report_json(b.repair)}};
}

inline std::string crc32_hex(const std::string& text) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace detail

inline std::string serialize_bundle(const ResortBundle& b) {
  auto body = detail::bundle_body(b);
  body["checksum"] = detail::crc32_hex(body.dump());
  return body.dump(1) + "\n";
}

inline ResortBundle parse_bundle(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kBundleFormatVersion)
      throw Error(ErrorCode::VersionMismatch, "bundle format " + std::to_string(version) + ", expected " +
                                                  std::to_string(kBundleFormatVersion));
    const std::string stored = doc.at("checksum").get<std::string>();
    doc.erase("checksum");
    if (detail::crc32_hex(doc.dump()) != stored) throw Error(ErrorCode::ChecksumMismatch, "content checksum differs");

    ResortBundle b;
    b.format_version = version;
    b.name = doc.at("resort").at("name").get<std::string>();
    b.graph.name = b.name;
    for (const auto& n : doc.at("nodes")) {
      Node node;
      node.id = n.at("id").get<NodeId>();
      node.position = detail::point_from(n.at("position"));
      node.elevation = detail::optional_from<double>(n, "elevation");
      b.graph.nodes.push_back(node);
    }
    for (const auto& e : doc.at("edges")) b.graph.edges.push_back(edge_from_json(e));
    b.repair = repair_report_from_json(doc.at("repair_report"));
    for (NodeId i = 0; i < b.graph.nodes.size(); ++i)
      if (b.graph.nodes[i].id != i) throw Error(ErrorCode::ParseError, "node ids must be dense and ordered");
    b.graph.check();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

inline void save_bundle(const ResortBundle& b, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << serialize_bundle(b);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

inline ResortBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_bundle(ss.str());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::ParseError, path + ": " + e.what());
    throw;
  }
}

}  // namespace skiroute
