#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "skiroute/bundle.hpp"
#include "skiroute/geo.hpp"
#include "skiroute/model.hpp"
#include "skiroute/network.hpp"
#include "skiroute/preference.hpp"
#include "skiroute/segmentation.hpp"

namespace fixtures {

using namespace skiroute;

inline const LocalFrame& frame() {
  static const LocalFrame f(GeoPoint{10.0, 47.0, std::nullopt});
  return f;
}

inline GeoPoint at(double x, double y) { return frame().to_geo({x, y}); }

inline Polyline path(std::initializer_list<Vec2> pts) {
  Polyline out;
  for (const auto& p : pts) out.push_back(at(p.x, p.y));
  return out;
}

struct SlopeSpec {
  std::string id;
  std::string name;
  NodeId from;
  NodeId to;
  Polyline geometry;
  Difficulty difficulty;
  bool groomed;
  double popularity;
  std::vector<double> steepness;
  std::vector<double> altitude;
  std::vector<Compass> compass;
  double travel_time;
};

// Attributes are set by hand, independent of the geometry, so cost goldens
// can be computed from the table alone.
inline Edge make_slope(const SlopeSpec& s) {
  Edge e;
  e.id = s.id;
  e.name = s.name;
  e.kind = EdgeKind::slope;
  e.from = s.from;
  e.to = s.to;
  e.geometry = s.geometry;
  e.difficulty = s.difficulty;
  e.difficulty_declared = true;
  e.groomed = s.groomed;
  e.popularity = s.popularity;
  e.median_travel_time = s.travel_time;
  e.travel_time_source = TravelTimeSource::measured;
  const std::size_t K = s.steepness.size();
  const double len = polyline_length(e.geometry);
  e.subsegments = segmentize(e.geometry, len / static_cast<double>(K));
  if (e.subsegments.size() != K) throw std::logic_error("fixture slope " + s.id + " split into wrong K");
  for (std::size_t k = 0; k < K; ++k) {
    auto& seg = e.subsegments[k];
    seg.steepness = s.steepness[k];
    seg.altitude = s.altitude[k];
    seg.compass = s.compass[k];
    seg.attributed = true;
  }
  return e;
}

// Lift attributes follow a straight line between the endpoint elevations.
inline Edge make_lift(const std::string& id, NodeId from, NodeId to, const Polyline& geometry, double ele_from,
                      double ele_to, std::optional<double> travel_time, bool bidirectional = false) {
  Edge e;
  e.id = id;
  e.name = id;
  e.kind = EdgeKind::lift;
  e.lift_type = LiftType::chair;
  e.bidirectional = bidirectional;
  e.from = from;
  e.to = to;
  e.geometry = geometry;
  e.popularity = 0.5;
  if (travel_time) {
    e.median_travel_time = travel_time;
    e.travel_time_source = TravelTimeSource::measured;
  }
  e.subsegments = segmentize(e.geometry);
  const double total = polyline_length(e.geometry);
  double s = 0.0;
  for (auto& seg : e.subsegments) {
    const double mid = s + seg.length / 2.0;
    s += seg.length;
    seg.altitude = ele_from + (ele_to - ele_from) * mid / total;
    seg.steepness = 100.0 * (ele_from - ele_to) / total;
    seg.compass = compass_from_bearing(bearing(seg.start, seg.end));
    seg.attributed = true;
  }
  return e;
}

inline Node make_node(NodeId id, double x, double y, double ele) {
  auto p = at(x, y);
  p.ele = ele;
  return {id, p, ele};
}

// ---------------------------------------------------------------------------
// Five-slope resort: base B, two summits T1 (north) and T2 (east), one lift to
// each summit and five slopes back to the base.

inline constexpr NodeId B = 0, T1 = 1, T2 = 2;

inline std::vector<SlopeSpec> five_slope_specs(double time_scale = 1.0) {
  using C = Compass;
  return {
      {"S1", "Panorama", T1, B, path({{0, 700}, {0, 0}}), Difficulty::intermediate, true, 0.6,
       {28, 32, 35, 30, 25}, {1680, 1640, 1600, 1560, 1520}, {C::S, C::S, C::S, C::S, C::S}, 780 * time_scale},
      {"S2", "Waldweg", T1, B, path({{0, 700}, {-250, 350}, {0, 0}}), Difficulty::easy, true, 0.2,
       {12, 15, 18, 20, 14, 10}, {1690, 1660, 1620, 1580, 1550, 1520}, {C::SW, C::SW, C::S, C::SE, C::SE, C::S},
       900 * time_scale},
      {"S3", "Nordhang", T2, B, path({{700, 0}, {0, 0}}), Difficulty::advanced, false, 0.9,
       {45, 50, 42, 38, 30}, {1720, 1680, 1620, 1570, 1520}, {C::N, C::N, C::NE, C::N, C::NW}, 720 * time_scale},
      {"S4", "Sonnenpiste", T2, B, path({{700, 0}, {350, -250}, {0, 0}}), Difficulty::intermediate, true, 0.4,
       {22, 27, 31, 29, 33, 26}, {1730, 1690, 1650, 1600, 1560, 1520}, {C::SE, C::SE, C::S, C::S, C::SE, C::E},
       840 * time_scale},
      {"S5", "Rinne", T2, B, path({{700, 0}, {300, 300}, {0, 0}}), Difficulty::intermediate, false, 0.1,
       {20, 24, 30, 36, 40}, {1740, 1700, 1640, 1580, 1530}, {C::E, C::E, C::SE, C::S, C::S}, 960 * time_scale},
  };
}

inline ResortGraph five_slope_resort(double time_scale = 1.0) {
  ResortGraph g;
  g.name = "Five Slope Fixture";
  g.nodes = {make_node(B, 0, 0, 1500), make_node(T1, 0, 700, 1700), make_node(T2, 700, 0, 1750)};
  g.edges.push_back(make_lift("L1", B, T1, path({{0, 0}, {0, 700}}), 1500, 1700, 900 * time_scale));
  g.edges.push_back(make_lift("L2", B, T2, path({{0, 0}, {700, 0}}), 1500, 1750, 960 * time_scale));
  for (const auto& s : five_slope_specs(time_scale)) g.edges.push_back(make_slope(s));
  return g;
}

inline PreferenceSet five_slope_preferences() {
  PreferenceSet p;
  p.name = "fixture";
  p.preferences = {
      {Attribute::steepness, 1.0, 30.0, 10.0},
      {Attribute::compass, 0.5, CompassSet{Compass::S, Compass::SE}, 1.0},
      {Attribute::grooming, 0.8, true, 1.0},
      {Attribute::altitude, 0.3, 1600.0, 300.0},
      {Attribute::crowdedness, 0.4, 0.2, 0.25},
  };
  return p;
}

inline ResortBundle five_slope_bundle() {
  ResortBundle b;
  b.name = "Five Slope Fixture";
  b.graph = five_slope_resort();
  return b;
}

// ---------------------------------------------------------------------------
// Repair fixture: a lift/slope loop at base B plus three slopes from the
// summit whose ends stop 10 m, 20 m and 45 m short of B.

inline RawFeature raw(const std::string& id, const std::string& kind, const Polyline& g,
                      std::map<std::string, std::string> tags = {}) {
  return {id, kind, g, std::move(tags)};
}

inline std::vector<RawFeature> repair_features() {
  return {
      raw("lift", "lift", path({{0, 0}, {0, 500}}), {{"aerialway", "chair_lift"}}),
      raw("main", "slope", path({{0, 500}, {80, 250}, {0, 0}}), {{"piste:difficulty", "easy"}}),
      raw("gap10", "slope", path({{0, 500}, {-60, 250}, {0, -10}}), {{"piste:difficulty", "easy"}}),
      raw("gap20", "slope", path({{0, 500}, {120, 250}, {20, 0}}), {{"piste:difficulty", "intermediate"}}),
      raw("gap45", "slope", path({{0, 500}, {-140, 250}, {-45, 0}}), {{"piste:difficulty", "advanced"}}),
  };
}

inline ResortGraph repair_resort() {
  auto ingested = ingest(repair_features(), nullptr);
  return build_topology(std::move(ingested.edges));
}

// ---------------------------------------------------------------------------
// Random small resorts for oracle comparisons.

inline ResortGraph random_resort(std::mt19937& rng, std::size_t n_nodes, std::size_t n_edges) {
  std::uniform_real_distribution<double> coord(-800, 800);
  std::uniform_real_distribution<double> unit(0, 1);
  ResortGraph g;
  g.name = "random";
  for (NodeId i = 0; i < n_nodes; ++i) g.nodes.push_back(make_node(i, coord(rng), coord(rng), 1500 + 500 * unit(rng)));
  std::uniform_int_distribution<NodeId> pick(0, n_nodes - 1);
  std::uniform_int_distribution<int> kdist(1, 6);
  for (std::size_t k = 0; k < n_edges; ++k) {
    NodeId a = pick(rng), b = pick(rng);
    while (b == a) b = pick(rng);
    const auto& pa = g.nodes[a].position;
    const auto& pb = g.nodes[b].position;
    const double r = unit(rng);
    const std::string id = "e" + std::to_string(k);
    if (r < 0.3) {
      g.edges.push_back(make_lift(id, a, b, {pa, pb}, *g.nodes[a].elevation, *g.nodes[b].elevation, std::nullopt,
                                  unit(rng) < 0.4));
    } else if (r < 0.38) {
      Edge h = make_lift(id, a, b, {pa, pb}, *g.nodes[a].elevation, *g.nodes[b].elevation, std::nullopt);
      h.kind = EdgeKind::helper;
      g.edges.push_back(std::move(h));
    } else {
      const int K = kdist(rng);
      SlopeSpec s{id, id, a, b, {pa, pb}, kDifficulties[static_cast<std::size_t>(K) % 4], unit(rng) < 0.7,
                  unit(rng), {}, {}, {}, 300};
      for (int i = 0; i < K; ++i) {
        s.steepness.push_back(-10 + 70 * unit(rng));
        s.altitude.push_back(1400 + 800 * unit(rng));
        s.compass.push_back(kCompassBins[static_cast<std::size_t>(8 * unit(rng)) % 8]);
      }
      g.edges.push_back(make_slope(s));
    }
  }
  return g;
}

inline PreferenceSet random_preferences(std::mt19937& rng) {
  std::uniform_real_distribution<double> unit(0, 1);
  PreferenceSet p;
  p.preferences.push_back({Attribute::steepness, unit(rng), 60 * unit(rng) - 10, 2 + 20 * unit(rng)});
  p.preferences.push_back({Attribute::altitude, unit(rng), 1400 + 800 * unit(rng), 50 + 500 * unit(rng)});
  CompassSet bins;
  for (auto c : kCompassBins)
    if (unit(rng) < 0.3) bins.insert(c);
  if (bins.empty()) bins.insert(Compass::N);
  p.preferences.push_back({Attribute::compass, unit(rng), bins, 1.0});
  p.preferences.push_back({Attribute::grooming, unit(rng), unit(rng) < 0.5, 1.0});
  p.preferences.push_back({Attribute::crowdedness, unit(rng), unit(rng), 0.05 + 0.5 * unit(rng)});
  // at least one active preference
  std::uniform_int_distribution<std::size_t> which(0, p.preferences.size() - 1);
  if (p.active_count() == 0) p.preferences[which(rng)].weight = 0.5;
  // randomly deactivate some
  for (auto& pref : p.preferences)
    if (unit(rng) < 0.2 && p.active_count() > 1) pref.weight = 0.0;
  return p;
}

}  // namespace fixtures
