#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skiroute/error.hpp"
#include "skiroute/geo.hpp"

namespace skiroute {

enum class Difficulty { easy, intermediate, advanced, freeride };
enum class Compass { N, NE, E, SE, S, SW, W, NW };
enum class EdgeKind { slope, lift, helper };
enum class LiftType { t_bar, chair, gondola, cable_car };
enum class TravelTimeSource { none, measured, interpolated, nominal };

inline constexpr std::array<Difficulty, 4> kDifficulties{Difficulty::easy, Difficulty::intermediate,
                                                         Difficulty::advanced, Difficulty::freeride};
inline constexpr std::array<Compass, 8> kCompassBins{Compass::N,  Compass::NE, Compass::E, Compass::SE,
                                                     Compass::S,  Compass::SW, Compass::W, Compass::NW};

constexpr std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::intermediate: return "intermediate";
    case Difficulty::advanced: return "advanced";
    case Difficulty::freeride: return "freeride";
  }
  return "easy";
}

constexpr std::string_view to_string(Compass c) {
  constexpr std::array<std::string_view, 8> names{"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
  return names[static_cast<std::size_t>(c)];
}

constexpr std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::slope: return "slope";
    case EdgeKind::lift: return "lift";
    case EdgeKind::helper: return "helper";
  }
  return "slope";
}

constexpr std::string_view to_string(LiftType t) {
  switch (t) {
    case LiftType::t_bar: return "t-bar";
    case LiftType::chair: return "chair";
    case LiftType::gondola: return "gondola";
    case LiftType::cable_car: return "cable_car";
  }
  return "chair";
}

constexpr std::string_view to_string(TravelTimeSource s) {
  switch (s) {
    case TravelTimeSource::none: return "none";
    case TravelTimeSource::measured: return "measured";
    case TravelTimeSource::interpolated: return "interpolated";
    case TravelTimeSource::nominal: return "nominal";
  }
  return "none";
}

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view text, const std::array<Enum, N>& values) {
  for (Enum v : values)
    if (to_string(v) == text) return v;
  return std::nullopt;
}

inline std::optional<Difficulty> parse_difficulty(std::string_view s) { return parse_enum(s, kDifficulties); }
inline std::optional<Compass> parse_compass(std::string_view s) { return parse_enum(s, kCompassBins); }
inline std::optional<EdgeKind> parse_edge_kind(std::string_view s) {
  return parse_enum(s, std::array{EdgeKind::slope, EdgeKind::lift, EdgeKind::helper});
}
inline std::optional<LiftType> parse_lift_type(std::string_view s) {
  return parse_enum(s, std::array{LiftType::t_bar, LiftType::chair, LiftType::gondola, LiftType::cable_car});
}
inline std::optional<TravelTimeSource> parse_travel_time_source(std::string_view s) {
  return parse_enum(s, std::array{TravelTimeSource::none, TravelTimeSource::measured,
                                  TravelTimeSource::interpolated, TravelTimeSource::nominal});
}

/// Opposite direction: 4 bins around the rose.
constexpr Compass opposite(Compass c) {
  return static_cast<Compass>((static_cast<int>(c) + 4) % 8);
}

/// 45 degree bins centered on the eight directions, N = [-22.5, 22.5).
inline Compass compass_from_bearing(double degrees) {
  double d = std::fmod(degrees + 22.5, 360.0);
  if (d < 0.0) d += 360.0;
  return static_cast<Compass>(static_cast<int>(d / 45.0) % 8);
}

/// ~30 m piece of an edge; the unit of attribute and cost evaluation.
struct SubSegment {
  std::size_t index = 0;
  GeoPoint start;
  GeoPoint end;
  GeoPoint mid;         // arc-length midpoint
  double length = 0.0;  // horizontal meters
  double altitude = 0.0;
  double steepness = 0.0;  // percent, positive when descending along travel direction
  Compass compass = Compass::N;
  bool attributed = false;

  // The same piece travelled the other way.
  SubSegment reversed() const {
    SubSegment r = *this;
    std::swap(r.start, r.end);
    r.steepness = -steepness;
    r.compass = opposite(compass);
    return r;
  }
};

struct LiftAmenities {
  bool heated_seats = false;
  bool bubble = false;
  int occupancy = 0;
};

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

/// A slope, lift, or synthetic connector. Kind-specific fields are ignored for
/// the other kinds.
struct Edge {
  std::string id;
  EdgeKind kind = EdgeKind::slope;
  std::string name;
  std::string ref;
  Polyline geometry;  // travel direction: slopes top->bottom, lifts bottom->top

  // slopes
  Difficulty difficulty = Difficulty::easy;
  bool difficulty_declared = false;
  bool groomed = true;

  // lifts
  LiftType lift_type = LiftType::chair;
  bool bidirectional = false;
  LiftAmenities amenities;

  std::vector<SubSegment> subsegments;

  std::optional<double> popularity;
  std::optional<double> median_travel_time;  // seconds
  TravelTimeSource travel_time_source = TravelTimeSource::none;

  NodeId from = kNoNode;
  NodeId to = kNoNode;

  std::size_t K() const { return subsegments.size(); }
  double length() const {
    double total = 0.0;
    for (const auto& s : subsegments) total += s.length;
    return subsegments.empty() ? polyline_length(geometry) : total;
  }
  bool is_slope() const { return kind == EdgeKind::slope; }
  bool is_lift() const { return kind == EdgeKind::lift; }
  bool is_helper() const { return kind == EdgeKind::helper; }
  bool fully_attributed() const {
    if (subsegments.empty()) return false;
    for (const auto& s : subsegments)
      if (!s.attributed) return false;
    return true;
  }
  // Helper connectors and bidirectional lifts may be travelled both ways.
  bool traversable_reverse() const { return is_helper() || (is_lift() && bidirectional); }
};

struct Node {
  NodeId id = 0;
  GeoPoint position;
  std::optional<double> elevation;
};

struct ResortGraph {
  std::string name;
  std::vector<Node> nodes;
  std::vector<Edge> edges;  // slopes, lifts and helpers; helpers have kind == helper

  const Edge* find_edge(std::string_view id) const {
    for (const auto& e : edges)
      if (e.id == id) return &e;
    return nullptr;
  }
  std::optional<std::size_t> edge_index(std::string_view id) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].id == id) return i;
    return std::nullopt;
  }
  bool has_node(NodeId id) const { return id < nodes.size(); }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(nodes.size(), 0);
    for (const auto& e : edges) {
      if (e.from < deg.size()) ++deg[e.from];
      if (e.to < deg.size()) ++deg[e.to];
    }
    return deg;
  }

  std::vector<NodeId> dead_ends() const {
    std::vector<NodeId> out;
    const auto deg = degrees();
    for (NodeId n = 0; n < deg.size(); ++n)
      if (deg[n] == 1) out.push_back(n);
    return out;
  }

  std::size_t helper_count() const {
    std::size_t n = 0;
    for (const auto& e : edges) n += e.is_helper() ? 1 : 0;
    return n;
  }

  /// Throws InvalidArgument if an edge endpoint references a missing node.
  void check() const {
    for (const auto& e : edges)
      if (!has_node(e.from) || !has_node(e.to))
        throw Error(ErrorCode::InvalidArgument, "edge " + e.id + " references a missing node", e.id);
  }
};

/// Weakly connected components as sorted node lists, largest first.
inline std::vector<std::vector<NodeId>> weak_components(const ResortGraph& g) {
  std::vector<NodeId> parent(g.nodes.size());
  for (NodeId i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](NodeId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges) {
    const NodeId a = find(e.from);
    const NodeId b = find(e.to);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<NodeId, std::vector<NodeId>> groups;
  for (NodeId n = 0; n < parent.size(); ++n) groups[find(n)].push_back(n);
  std::vector<std::vector<NodeId>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

}  // namespace skiroute
