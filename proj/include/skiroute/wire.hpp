#pragma once

#include <array>
#include <string>

#include <nlohmann/json.hpp>

#include "skiroute/bundle.hpp"
#include "skiroute/model.hpp"
#include "skiroute/network.hpp"
#include "skiroute/preference.hpp"
#include "skiroute/routing.hpp"
#include "skiroute/trajectory.hpp"

// JSON shapes shared by the HTTP service and the CLI's --format json output.
namespace skiroute {

inline nlohmann::json to_json(const SlopeScore& s, const ResortGraph& g) {
  const Edge* e = g.find_edge(s.edge_id);
  return {{"edge_id", s.edge_id},
          {"name", e ? e->name : std::string()},
          {"difficulty", e ? std::string(to_string(e->difficulty)) : std::string()},
          {"cost", s.cost},
          {"s_pref", s.s_pref},
          {"per_segment", s.per_segment}};
}

inline nlohmann::json to_json(const Route& r) {
  auto steps = nlohmann::json::array();
  for (const auto& s : r.steps) steps.push_back({{"edge_id", s.edge_id}, {"reversed", s.reversed}});
  return {{"steps", steps}, {"nodes", r.nodes}, {"cost", r.cost}, {"favorites_covered", r.favorites_covered}};
}

inline nlohmann::json to_json(const RouteSummary& s) {
  auto profile = nlohmann::json::array();
  for (const auto& p : s.altitude_profile)
    profile.push_back(
        {{"distance", p.distance}, {"altitude", p.altitude}, {"steepness", p.steepness}, {"edge_id", p.edge_id}});
  return {{"vertical_descent", s.vertical_descent},
          {"total_length", s.total_length},
          {"estimated_time", s.estimated_time},
          {"difficulty_distribution", s.difficulty_distribution},
          {"steepness_distribution", s.steepness_distribution},
          {"altitude_profile", profile},
          {"freeride_disclaimer", s.freeride_disclaimer}};
}

inline nlohmann::json to_json(const Plan& p) {
  return {{"route", to_json(p.route)},
          {"summary", to_json(p.summary)},
          {"favorites", p.favorites},
          {"freeride_disclaimer", p.summary.freeride_disclaimer}};
}

inline nlohmann::json to_json(const QualityReport& q) {
  nlohmann::json lengths = nlohmann::json::object();
  for (const auto& [d, len] : q.length_by_difficulty) lengths[std::string(to_string(d))] = len;
  return {{"length_by_difficulty", lengths},
          {"total_slope_length", q.total_slope_length},
          {"dead_ends", q.dead_ends},
          {"disconnected_components", q.disconnected_components},
          {"missing_attributes", q.missing_attributes}};
}

inline nlohmann::json to_json(const TrajectoryReport& r) {
  return {{"activities", r.activities},
          {"accepted", r.accepted},
          {"rejected", r.rejected},
          {"rides", r.rides},
          {"matched_rides", r.matched_rides},
          {"discarded_rides", r.discarded_rides},
          {"samples_per_edge", r.samples_per_edge}};
}

/// Per-edge tooltip data: geometry statistics, altitude profile and compass histogram.
struct SlopeDetail {
  double length = 0.0;
  double ascent = 0.0;
  double descent = 0.0;
  double mean_steepness = 0.0;  // length-weighted
  double max_steepness = 0.0;
  std::array<double, 8> compass_histogram{};  // fraction of subsegments per bin, N first
  std::vector<ProfileSample> profile;
};

inline SlopeDetail slope_detail(const Edge& e) {
  SlopeDetail d;
  d.length = e.length();
  double weighted = 0.0, attributed_length = 0.0;
  bool any = false;
  double at = 0.0;
  for (const auto& s : e.subsegments) {
    at += s.length;
    d.compass_histogram[static_cast<std::size_t>(s.compass)] += 1.0;
    if (!s.attributed) continue;
    const double drop = s.steepness * s.length / 100.0;
    if (drop > 0.0) d.descent += drop;
    else d.ascent -= drop;
    weighted += s.steepness * s.length;
    attributed_length += s.length;
    d.max_steepness = any ? std::max(d.max_steepness, s.steepness) : s.steepness;
    any = true;
    d.profile.push_back({at, s.altitude, s.steepness, e.id});
  }
  if (attributed_length > 0.0) d.mean_steepness = weighted / attributed_length;
  if (!e.subsegments.empty())
    for (double& f : d.compass_histogram) f /= static_cast<double>(e.subsegments.size());
  return d;
}

inline nlohmann::json slope_json(const Edge& e) {
  const auto d = slope_detail(e);
  nlohmann::json hist = nlohmann::json::object();
  for (auto c : kCompassBins) hist[std::string(to_string(c))] = d.compass_histogram[static_cast<std::size_t>(c)];
  auto profile = nlohmann::json::array();
  for (const auto& p : d.profile)
    profile.push_back({{"distance", p.distance}, {"altitude", p.altitude}, {"steepness", p.steepness}});
  nlohmann::json j{{"id", e.id},
                   {"name", e.name},
                   {"kind", to_string(e.kind)},
                   {"length", d.length},
                   {"ascent", d.ascent},
                   {"descent", d.descent},
                   {"mean_steepness", d.mean_steepness},
                   {"max_steepness", d.max_steepness},
                   {"median_travel_time", e.median_travel_time ? nlohmann::json(*e.median_travel_time) : nlohmann::json()},
                   {"travel_time_source", to_string(e.travel_time_source)},
                   {"popularity", e.popularity ? nlohmann::json(*e.popularity) : nlohmann::json()},
                   {"altitude_profile", profile},
                   {"compass_histogram", hist}};
  if (e.is_slope()) {
    j["difficulty"] = to_string(e.difficulty);
    j["groomed"] = e.groomed;
  }
  if (e.is_lift()) j["lift_type"] = to_string(e.lift_type);
  return j;
}

/// FeatureCollection of edges (LineStrings) followed by nodes (Points).
inline nlohmann::json resort_geojson(const ResortGraph& g) {
  auto features = nlohmann::json::array();
  for (const auto& e : g.edges) {
    auto coords = nlohmann::json::array();
    for (const auto& p : e.geometry) coords.push_back({p.lon, p.lat});
    auto steep = nlohmann::json::array();
    for (const auto& s : e.subsegments) steep.push_back(s.attributed ? nlohmann::json(s.steepness) : nlohmann::json());
    nlohmann::json props{{"feature_type", "edge"},
                         {"id", e.id},
                         {"kind", to_string(e.kind)},
                         {"name", e.name},
                         {"from", e.from},
                         {"to", e.to},
                         {"length", e.length()},
                         {"steepness", steep},
                         {"popularity", e.popularity ? nlohmann::json(*e.popularity) : nlohmann::json()}};
    if (e.is_slope()) {
      props["difficulty"] = to_string(e.difficulty);
      props["groomed"] = e.groomed;
    }
    if (e.is_lift()) {
      props["lift_type"] = to_string(e.lift_type);
      props["bidirectional"] = e.bidirectional;
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                        {"properties", props}});
  }
  for (const auto& n : g.nodes)
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "Point"}, {"coordinates", {n.position.lon, n.position.lat}}}},
         {"properties",
          {{"feature_type", "node"}, {"id", n.id}, {"elevation", n.elevation ? nlohmann::json(*n.elevation) : nlohmann::json()}}}});
  return {{"type", "FeatureCollection"}, {"name", g.name}, {"features", features}};
}

inline nlohmann::json error_json(const Error& e) {
  nlohmann::json j{{"error", to_string(e.code())}, {"message", e.what()}};
  if (!e.subject().empty()) j["field"] = e.subject();
  return j;
}

}  // namespace skiroute
