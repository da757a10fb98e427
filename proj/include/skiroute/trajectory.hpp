#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "skiroute/error.hpp"
#include "skiroute/geo.hpp"
#include "skiroute/model.hpp"

namespace skiroute {

struct TrajectoryConfig {
  std::size_t min_points = 30;
  double max_median_interval = 1.0;  // seconds
  std::size_t smoothing_window = 5;
  double turn_persistence_time = 60.0;   // seconds
  double turn_persistence_height = 20.0;  // meters
  double candidate_radius = 50.0;
  double max_mean_residual = 25.0;
  double max_unmatched_fraction = 0.5;
  double switch_penalty = 1.0;         // meters, discourages flip-flopping between edges
  double disconnected_penalty = 500.0;  // meters, lets a ride jump between non-adjacent edges
  double min_coverage = 0.8;
  std::size_t min_measured_samples = 10;
  double measured_sample_fraction = 0.10;
};

struct TrackPoint {
  GeoPoint position;  // position.ele holds the recorded elevation
  double t = 0.0;     // seconds since the first point
};

/// Recorded ski day; times are relative to the first point.
struct ActivityTrack {
  std::string id;
  std::vector<TrackPoint> points;
};

enum class RideDirection { up, down };

constexpr std::string_view to_string(RideDirection d) { return d == RideDirection::up ? "up" : "down"; }

/// Contiguous slice [first, last] of an activity.
struct RideSegment {
  std::string activity_id;
  RideDirection direction = RideDirection::down;
  std::size_t first = 0;
  std::size_t last = 0;
  std::vector<TrackPoint> points;
};

struct FilterResult {
  bool accepted = false;
  std::string reason;  // too_short | zero_extent | low_frequency
  double median_interval = 0.0;
};

namespace detail {

template <typename T>
T median_of(std::vector<T> v) {
  if (v.empty()) return T{};
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const T upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const T lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2;
}

inline double elevation_of(const TrackPoint& p) { return p.position.ele.value_or(0.0); }

}  // namespace detail

/// Drops tracks too sparse in time or space to map onto individual slopes.
inline FilterResult filter_activity(const ActivityTrack& track, const TrajectoryConfig& cfg = {}) {
  FilterResult r;
  if (track.points.size() < std::max<std::size_t>(cfg.min_points, 2)) {
    r.reason = "too_short";
    return r;
  }
  std::vector<double> intervals;
  intervals.reserve(track.points.size() - 1);
  for (std::size_t i = 1; i < track.points.size(); ++i)
    intervals.push_back(track.points[i].t - track.points[i - 1].t);
  r.median_interval = detail::median_of(intervals);

  double extent = 0.0;
  const auto& first = track.points.front().position;
  for (const auto& p : track.points) extent = std::max(extent, distance(first, p.position));
  if (!(extent > 0.0)) {
    r.reason = "zero_extent";
    return r;
  }
  if (r.median_interval > cfg.max_median_interval) {
    r.reason = "low_frequency";
    return r;
  }
  r.accepted = true;
  return r;
}

/// Centered moving median; the window shrinks symmetrically at the ends.
inline std::vector<double> moving_median(std::span<const double> values, std::size_t window) {
  std::vector<double> out(values.size());
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t reach = std::min({half, i, values.size() - 1 - i});
    out[i] = detail::median_of(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(i - reach),
                                                   values.begin() + static_cast<std::ptrdiff_t>(i + reach + 1)));
  }
  return out;
}

/// Splits a ski day into alternating lift (up) and ski (down) rides. A turn is
/// accepted at an elevation extremum once the reversal has climbed/dropped
/// `turn_persistence_height` or kept going monotonically for
/// `turn_persistence_time`. Neighbouring rides share their turning point.
inline std::vector<RideSegment> segment_by_altitude(const ActivityTrack& track, const TrajectoryConfig& cfg = {}) {
  const auto& pts = track.points;
  std::vector<RideSegment> out;
  if (pts.size() < 2) return out;

  std::vector<double> raw(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) raw[i] = detail::elevation_of(pts[i]);
  const auto ele = moving_median(raw, cfg.smoothing_window);

  // First index of the current run of non-decreasing / non-increasing steps.
  std::size_t rising_since = 0;
  std::size_t falling_since = 0;
  auto confirmed = [&](std::size_t pivot, std::size_t i, int direction) {
    const double change = (ele[i] - ele[pivot]) * direction;
    if (change >= cfg.turn_persistence_height) return true;
    const std::size_t run = direction > 0 ? rising_since : falling_since;
    return change > 0.0 && run <= pivot && pts[i].t - pts[pivot].t >= cfg.turn_persistence_time;
  };
  auto extremum = [&](std::size_t from, std::size_t to, int direction) {
    std::size_t best = from;
    for (std::size_t j = from; j <= to; ++j)
      if ((ele[j] - ele[best]) * direction >= 0.0) best = j;
    return best;
  };

  std::vector<std::size_t> turns{0};
  int dir = 0;  // +1 climbing, -1 descending, 0 undecided
  std::size_t pivot = 0, lowest = 0, highest = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double step = ele[i] - ele[i - 1];
    if (step < 0.0) rising_since = i;
    if (step > 0.0) falling_since = i;

    if (dir == 0) {
      if (ele[i] < ele[lowest]) lowest = i;
      if (ele[i] > ele[highest]) highest = i;
      if (confirmed(lowest, i, +1)) {
        dir = +1;
        pivot = extremum(lowest, i, +1);
      } else if (confirmed(highest, i, -1)) {
        dir = -1;
        pivot = extremum(highest, i, -1);
      }
      continue;
    }
    if ((ele[i] - ele[pivot]) * dir >= 0.0) {
      pivot = i;
    } else if (confirmed(pivot, i, -dir)) {
      turns.push_back(pivot);
      dir = -dir;
      pivot = extremum(pivot, i, dir);
    }
  }
  turns.push_back(pts.size() - 1);
  turns.erase(std::unique(turns.begin(), turns.end()), turns.end());

  for (std::size_t k = 0; k + 1 < turns.size(); ++k) {
    const std::size_t a = turns[k];
    const std::size_t b = turns[k + 1];
    const double net = ele[b] - ele[a];
    if (net == 0.0 && out.empty()) continue;
    RideSegment seg;
    seg.activity_id = track.id;
    seg.direction = net > 0.0 ? RideDirection::up : net < 0.0 ? RideDirection::down : out.back().direction;
    seg.first = a;
    seg.last = b;
    seg.points.assign(pts.begin() + static_cast<std::ptrdiff_t>(a), pts.begin() + static_cast<std::ptrdiff_t>(b) + 1);
    if (!out.empty() && out.back().direction == seg.direction) {
      // merge same-direction neighbours
      out.back().last = b;
      out.back().points.insert(out.back().points.end(), seg.points.begin() + 1, seg.points.end());
      continue;
    }
    out.push_back(std::move(seg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Map matching

struct MatchResult {
  std::vector<std::string> edges;                    // collapsed edge sequence
  std::vector<std::optional<std::size_t>> assignment;  // graph edge index per ride point
  double mean_residual = 0.0;
};

/// Snaps rides onto graph edges. Each point is scored against edges within
/// the candidate radius; a Viterbi pass picks the sequence with the least
/// total perpendicular distance where consecutive edges must meet at a node.
class MapMatcher {
 public:
  MapMatcher(const ResortGraph& g, TrajectoryConfig cfg = {}) : graph_(&g), cfg_(cfg) {
    if (!g.nodes.empty()) frame_ = LocalFrame(g.nodes.front().position);
    lines_.reserve(g.edges.size());
    for (const auto& e : g.edges) lines_.emplace_back(frame_, e.geometry);
    // Node pairs joined by a helper connector count as the same junction.
    bridged_.resize(g.nodes.size());
    for (NodeId n = 0; n < g.nodes.size(); ++n) bridged_[n].push_back(n);
    for (const auto& e : g.edges)
      if (e.is_helper()) {
        bridged_[e.from].push_back(e.to);
        bridged_[e.to].push_back(e.from);
      }
  }

  const LocalFrame& frame() const { return frame_; }
  const LocalPolyline& line(std::size_t edge) const { return lines_[edge]; }

  bool adjacent(std::size_t a, std::size_t b) const {
    const Edge& ea = graph_->edges[a];
    const Edge& eb = graph_->edges[b];
    const auto& reach = bridged_[ea.to];
    return std::find(reach.begin(), reach.end(), eb.from) != reach.end();
  }

  MatchResult match(const RideSegment& ride) const {
    struct Candidate {
      std::size_t edge;
      double dist;
    };
    const auto& g = *graph_;
    const std::size_t n = ride.points.size();
    std::vector<std::vector<Candidate>> cands(n);
    std::size_t matched_points = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 q = frame_.to_local(ride.points[i].position);
      for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const Edge& edge = g.edges[e];
        const bool eligible = ride.direction == RideDirection::up ? edge.is_lift() : !edge.is_lift();
        if (!eligible) continue;
        const double d = lines_[e].project(q).distance;
        if (d <= cfg_.candidate_radius) cands[i].push_back({e, d});
      }
      matched_points += cands[i].empty() ? 0 : 1;
    }
    if (n == 0 || static_cast<double>(n - matched_points) > cfg_.max_unmatched_fraction * static_cast<double>(n))
      throw Error(ErrorCode::NoMatch, "no edge within " + std::to_string(cfg_.candidate_radius) +
                                          " m for most points of ride from " + ride.activity_id);

    // Viterbi over points that have candidates.
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (!cands[i].empty()) idx.push_back(i);
    std::vector<std::vector<double>> score(idx.size());
    std::vector<std::vector<std::size_t>> back(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& cur = cands[idx[k]];
      score[k].assign(cur.size(), std::numeric_limits<double>::infinity());
      back[k].assign(cur.size(), 0);
      for (std::size_t s = 0; s < cur.size(); ++s) {
        if (k == 0) {
          score[k][s] = cur[s].dist;
          continue;
        }
        const auto& prev = cands[idx[k - 1]];
        for (std::size_t p = 0; p < prev.size(); ++p) {
          double trans = 0.0;
          if (prev[p].edge != cur[s].edge)
            trans = adjacent(prev[p].edge, cur[s].edge) ? cfg_.switch_penalty : cfg_.disconnected_penalty;
          const double total = score[k - 1][p] + trans + cur[s].dist;
          if (total < score[k][s]) {
            score[k][s] = total;
            back[k][s] = p;
          }
        }
      }
    }

    MatchResult r;
    r.assignment.assign(n, std::nullopt);
    std::size_t state = static_cast<std::size_t>(
        std::min_element(score.back().begin(), score.back().end()) - score.back().begin());
    double residual = 0.0;
    for (std::size_t k = idx.size(); k-- > 0;) {
      const auto& c = cands[idx[k]][state];
      r.assignment[idx[k]] = c.edge;
      residual += c.dist;
      state = back[k][state];
    }
    r.mean_residual = residual / static_cast<double>(idx.size());
    if (r.mean_residual > cfg_.max_mean_residual)
      throw Error(ErrorCode::NoMatch, "mean residual " + std::to_string(r.mean_residual) + " m exceeds limit");

    for (const auto& a : r.assignment)
      if (a && (r.edges.empty() || r.edges.back() != g.edges[*a].id)) r.edges.push_back(g.edges[*a].id);
    return r;
  }

 private:
  const ResortGraph* graph_;
  TrajectoryConfig cfg_;
  LocalFrame frame_;
  std::vector<LocalPolyline> lines_;
  std::vector<std::vector<NodeId>> bridged_;
};

inline MatchResult map_match(const RideSegment& ride, const ResortGraph& g, const TrajectoryConfig& cfg = {}) {
  return MapMatcher(g, cfg).match(ride);
}

/// The part of a ride attributed to one edge.
struct MatchedSubTrajectory {
  std::string edge_id;
  double entry = 0.0;  // seconds since activity start
  double exit = 0.0;
  double coverage = 0.0;  // fraction of the edge length traversed
  std::vector<TrackPoint> points;

  double duration() const { return exit - entry; }
};

/// Cuts a matched ride at junctions. Entry and exit times come from the ride
/// points nearest to each edge's from/to node; boundaries are shared by
/// consecutive edges so durations never overlap.
inline std::vector<MatchedSubTrajectory> split_at_intersections(const RideSegment& ride, const MatchResult& match,
                                                                const MapMatcher& matcher, const ResortGraph& g) {
  struct Run {
    std::size_t edge;
    std::size_t first;
    std::size_t last;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < match.assignment.size(); ++i) {
    const auto& a = match.assignment[i];
    if (!a) continue;
    if (!runs.empty() && runs.back().edge == *a) {
      runs.back().last = i;
    } else {
      runs.push_back({*a, i, i});
    }
  }

  const auto& frame = matcher.frame();
  auto nearest = [&](const GeoPoint& target, std::size_t lo, std::size_t hi) {
    const Vec2 t = frame.to_local(target);
    std::size_t best = lo;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i <= hi; ++i) {
      const Vec2 p = frame.to_local(ride.points[i].position);
      const double d = std::hypot(p.x - t.x, p.y - t.y);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };

  // boundary[k] = entry index of run k, boundary[k+1] = its exit index
  std::vector<std::size_t> entry(runs.size()), exit(runs.size());
  std::size_t floor_index = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const Edge& e = g.edges[runs[k].edge];
    if (k == 0) {
      entry[k] = nearest(g.nodes[e.from].position, runs[k].first, runs[k].last);
    } else if (g.edges[runs[k - 1].edge].to == e.from) {
      entry[k] = exit[k - 1];
    } else {
      entry[k] = nearest(g.nodes[e.from].position, std::max(floor_index, runs[k - 1].first), runs[k].last);
    }
    entry[k] = std::max(entry[k], floor_index);
    const std::size_t hi = k + 1 < runs.size() ? runs[k + 1].last : runs[k].last;
    exit[k] = std::max(nearest(g.nodes[e.to].position, std::max(entry[k], runs[k].first), hi), entry[k]);
    floor_index = exit[k];
  }

  std::vector<MatchedSubTrajectory> out;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const Edge& e = g.edges[runs[k].edge];
    const auto& line = matcher.line(runs[k].edge);
    if (!(line.length() > 0.0)) continue;
    const double s_in = line.project(frame.to_local(ride.points[entry[k]].position)).arc_position;
    const double s_out = line.project(frame.to_local(ride.points[exit[k]].position)).arc_position;
    const double coverage = std::min(1.0, (s_out - s_in) / line.length());
    if (!(coverage > 0.0)) continue;
    MatchedSubTrajectory sub;
    sub.edge_id = e.id;
    sub.entry = ride.points[entry[k]].t;
    sub.exit = ride.points[exit[k]].t;
    sub.coverage = coverage;
    sub.points.assign(ride.points.begin() + static_cast<std::ptrdiff_t>(entry[k]),
                      ride.points.begin() + static_cast<std::ptrdiff_t>(exit[k]) + 1);
    out.push_back(std::move(sub));
  }
  return out;
}

inline std::vector<MatchedSubTrajectory> split_at_intersections(const RideSegment& ride, const MatchResult& match,
                                                                const ResortGraph& g) {
  return split_at_intersections(ride, match, MapMatcher(g), g);
}

// ---------------------------------------------------------------------------
// Aggregates

/// ln(1 + n) / ln(1 + max n); all zeros when nothing was matched.
inline std::map<std::string, double> derive_popularity(const std::map<std::string, std::size_t>& counts) {
  std::size_t max_count = 0;
  for (const auto& [id, n] : counts) max_count = std::max(max_count, n);
  std::map<std::string, double> out;
  for (const auto& [id, n] : counts)
    out[id] = max_count == 0 ? 0.0 : std::log1p(static_cast<double>(n)) / std::log1p(static_cast<double>(max_count));
  return out;
}

struct TravelTimeEstimate {
  double seconds = 0.0;
  TravelTimeSource source = TravelTimeSource::none;
};

/// Least-squares speed (m/s) as a linear function of mean |steepness|.
struct SpeedRegression {
  double intercept = 0.0;
  double slope = 0.0;
  double mean_speed = 0.0;
  std::size_t samples = 0;

  double predict(double abs_steepness) const {
    const double v = intercept + slope * abs_steepness;
    return v > 0.0 ? v : mean_speed;
  }
};

inline SpeedRegression fit_speed_regression(std::span<const std::pair<double, double>> xy) {
  SpeedRegression r;
  r.samples = xy.size();
  if (xy.empty()) return r;
  double sx = 0, sy = 0;
  for (auto [x, y] : xy) {
    sx += x;
    sy += y;
  }
  const double n = static_cast<double>(xy.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0;
  for (auto [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  r.mean_speed = my;
  r.slope = sxx > 1e-12 ? sxy / sxx : 0.0;
  r.intercept = my - r.slope * mx;
  return r;
}

inline double mean_abs_steepness(const Edge& e) {
  double num = 0.0, den = 0.0;
  for (const auto& s : e.subsegments) {
    if (!s.attributed) continue;
    num += std::abs(s.steepness) * s.length;
    den += s.length;
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Per-resort inputs to travel-time estimation: the minimum sample count for a
/// measured value and the per-kind fallback speed models.
struct TravelTimeModel {
  double threshold = 10.0;
  std::map<EdgeKind, SpeedRegression> speed;
};

/// Median of duration / coverage over sub-trajectories with coverage >= min.
inline std::optional<double> measured_travel_time(std::span<const MatchedSubTrajectory> subs, double min_coverage,
                                                  double threshold) {
  std::vector<double> scaled;
  for (const auto& s : subs)
    if (s.coverage >= min_coverage) scaled.push_back(s.duration() / s.coverage);
  if (scaled.empty() || static_cast<double>(scaled.size()) < threshold) return std::nullopt;
  return detail::median_of(scaled);
}

inline TravelTimeEstimate derive_travel_time(std::span<const MatchedSubTrajectory> subs, const Edge& edge,
                                             const TravelTimeModel& model, const TrajectoryConfig& cfg = {}) {
  if (auto m = measured_travel_time(subs, cfg.min_coverage, model.threshold))
    return {*m, TravelTimeSource::measured};
  auto it = model.speed.find(edge.kind);
  if (it == model.speed.end() || it->second.samples == 0)
    throw Error(ErrorCode::NoData, "no measured " + std::string(to_string(edge.kind)) + " to interpolate from",
                edge.id);
  return {edge.length() / it->second.predict(mean_abs_steepness(edge)), TravelTimeSource::interpolated};
}

using SubTrajectoriesByEdge = std::map<std::string, std::vector<MatchedSubTrajectory>>;

inline TravelTimeModel fit_travel_time_model(const ResortGraph& g, const SubTrajectoriesByEdge& by_edge,
                                             const TrajectoryConfig& cfg = {}) {
  TravelTimeModel model;
  std::size_t edges = 0, kept = 0;
  for (const auto& e : g.edges) {
    if (e.is_helper()) continue;
    ++edges;
    if (auto it = by_edge.find(e.id); it != by_edge.end())
      for (const auto& s : it->second) kept += s.coverage >= cfg.min_coverage ? 1 : 0;
  }
  const double mean_kept = edges ? static_cast<double>(kept) / static_cast<double>(edges) : 0.0;
  model.threshold = std::max(static_cast<double>(cfg.min_measured_samples), cfg.measured_sample_fraction * mean_kept);

  std::map<EdgeKind, std::vector<std::pair<double, double>>> samples;
  for (const auto& e : g.edges) {
    if (e.is_helper()) continue;
    auto it = by_edge.find(e.id);
    if (it == by_edge.end()) continue;
    auto m = measured_travel_time(it->second, cfg.min_coverage, model.threshold);
    if (m && *m > 0.0) samples[e.kind].push_back({mean_abs_steepness(e), e.length() / *m});
  }
  for (const auto& [kind, xy] : samples) model.speed[kind] = fit_speed_regression(xy);
  return model;
}

struct TrajectoryReport {
  std::size_t activities = 0;
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> rejected;  // reason -> count
  std::size_t rides = 0;
  std::size_t matched_rides = 0;
  std::size_t discarded_rides = 0;
  std::map<std::string, std::size_t> samples_per_edge;
};

struct TrajectoryResult {
  TrajectoryReport report;
  SubTrajectoriesByEdge by_edge;
};

/// Filter, segment, match and split every activity.
inline TrajectoryResult process_tracks(const ResortGraph& g, std::span<const ActivityTrack> tracks,
                                       const TrajectoryConfig& cfg = {}) {
  TrajectoryResult result;
  const MapMatcher matcher(g, cfg);
  for (const auto& track : tracks) {
    ++result.report.activities;
    const auto verdict = filter_activity(track, cfg);
    if (!verdict.accepted) {
      ++result.report.rejected[verdict.reason];
      continue;
    }
    ++result.report.accepted;
    for (const auto& ride : segment_by_altitude(track, cfg)) {
      ++result.report.rides;
      try {
        const auto match = matcher.match(ride);
        ++result.report.matched_rides;
        for (auto& sub : split_at_intersections(ride, match, matcher, g)) {
          ++result.report.samples_per_edge[sub.edge_id];
          result.by_edge[sub.edge_id].push_back(std::move(sub));
        }
      } catch (const Error& err) {
        if (err.code() != ErrorCode::NoMatch) throw;
        ++result.report.discarded_rides;
      }
    }
  }
  return result;
}

/// Writes popularity and travel times into the graph's slopes and lifts.
inline void augment_graph(ResortGraph& g, const TrajectoryResult& result, const TrajectoryConfig& cfg = {}) {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : g.edges)
    if (!e.is_helper()) counts[e.id] = 0;
  for (const auto& [id, subs] : result.by_edge)
    if (counts.count(id)) counts[id] = subs.size();
  const auto popularity = derive_popularity(counts);

  const auto model = fit_travel_time_model(g, result.by_edge, cfg);
  static const std::vector<MatchedSubTrajectory> none;
  for (auto& e : g.edges) {
    if (e.is_helper()) continue;
    e.popularity = popularity.at(e.id);
    auto it = result.by_edge.find(e.id);
    const auto& subs = it == result.by_edge.end() ? none : it->second;
    try {
      const auto tt = derive_travel_time(subs, e, model, cfg);
      e.median_travel_time = tt.seconds;
      e.travel_time_source = tt.source;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NoData) throw;
    }
  }
}

// ---------------------------------------------------------------------------
// Density raster

struct GeoBBox {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  bool contains(const GeoPoint& p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
  }
  bool valid() const { return max_lon > min_lon && max_lat > min_lat; }
};

/// Row-major raster, top row first. `cell_lon`/`cell_lat` are the cell sizes in
/// degrees; `cell_size` is the nominal size in meters.
struct DensityRaster {
  double west = 0.0;
  double north = 0.0;
  double cell_lon = 0.0;
  double cell_lat = 0.0;
  double cell_size = 0.0;
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  std::vector<double> values;  // normalized to [0,1]
  double raw_mass = 0.0;       // integral of the unnormalized density (points)
  double raw_max = 0.0;

  double at(std::size_t col, std::size_t row) const { return values[row * ncols + col]; }
};

/// Gaussian kernel density of points over a bbox, normalized by the maximum cell.
inline DensityRaster kde_raster(std::span<const GeoPoint> points, const GeoBBox& bbox, double bandwidth = 15.0,
                                double cell = 5.0) {
  if (!bbox.valid()) throw Error(ErrorCode::InvalidArgument, "empty bounding box");
  if (!(bandwidth > 0.0) || !(cell > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth and cell must be positive");
  const LocalFrame frame(GeoPoint{bbox.min_lon, (bbox.min_lat + bbox.max_lat) / 2.0, std::nullopt});

  DensityRaster r;
  r.west = bbox.min_lon;
  r.north = bbox.max_lat;
  r.cell_size = cell;
  r.cell_lon = cell / frame.meters_per_deg_lon();
  r.cell_lat = cell / frame.meters_per_deg_lat();
  r.ncols = static_cast<std::size_t>(std::ceil((bbox.max_lon - bbox.min_lon) / r.cell_lon));
  r.nrows = static_cast<std::size_t>(std::ceil((bbox.max_lat - bbox.min_lat) / r.cell_lat));
  r.values.assign(r.ncols * r.nrows, 0.0);

  std::vector<Vec2> local;
  for (const auto& p : points)
    if (bbox.contains(p)) local.push_back({(p.lon - r.west) / r.cell_lon * cell, (r.north - p.lat) / r.cell_lat * cell});
  if (local.empty()) throw Error(ErrorCode::EmptyRegion, "no points inside the bounding box");

  const double norm = 1.0 / (2.0 * std::numbers::pi * bandwidth * bandwidth);
  const double reach = 4.0 * bandwidth;
  for (const auto& q : local) {
    // x grows east, y grows south (row direction)
    const auto c0 = static_cast<std::ptrdiff_t>(std::floor((q.x - reach) / cell));
    const auto c1 = static_cast<std::ptrdiff_t>(std::floor((q.x + reach) / cell));
    const auto r0 = static_cast<std::ptrdiff_t>(std::floor((q.y - reach) / cell));
    const auto r1 = static_cast<std::ptrdiff_t>(std::floor((q.y + reach) / cell));
    for (auto row = std::max<std::ptrdiff_t>(r0, 0); row <= std::min<std::ptrdiff_t>(r1, static_cast<std::ptrdiff_t>(r.nrows) - 1); ++row)
      for (auto col = std::max<std::ptrdiff_t>(c0, 0); col <= std::min<std::ptrdiff_t>(c1, static_cast<std::ptrdiff_t>(r.ncols) - 1); ++col) {
        const double dx = (static_cast<double>(col) + 0.5) * cell - q.x;
        const double dy = (static_cast<double>(row) + 0.5) * cell - q.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 > reach * reach) continue;
        r.values[static_cast<std::size_t>(row) * r.ncols + static_cast<std::size_t>(col)] +=
            norm * std::exp(-d2 / (2.0 * bandwidth * bandwidth));
      }
  }
  for (double v : r.values) {
    r.raw_mass += v * cell * cell;
    r.raw_max = std::max(r.raw_max, v);
  }
  if (r.raw_max > 0.0)
    for (double& v : r.values) v /= r.raw_max;
  return r;
}

// ---------------------------------------------------------------------------
// Track readers

namespace detail {

/// ISO 8601 timestamp (YYYY-MM-DDTHH:MM:SS[.fff][Z|+hh:mm]) to epoch seconds.
inline std::optional<double> parse_iso8601(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%lf%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6) return std::nullopt;
  using namespace std::chrono;
  const sys_days day = year{y} / month{static_cast<unsigned>(mo)} / std::chrono::day{static_cast<unsigned>(d)};
  double t = static_cast<double>(day.time_since_epoch().count()) * 86400.0 + h * 3600.0 + mi * 60.0 + sec;
  const std::string zone = s.substr(static_cast<std::size_t>(consumed));
  int zh = 0, zm = 0;
  if (!zone.empty() && (zone[0] == '+' || zone[0] == '-') && std::sscanf(zone.c_str() + 1, "%d:%d", &zh, &zm) >= 1) {
    const double offset = zh * 3600.0 + zm * 60.0;
    t += zone[0] == '+' ? -offset : offset;
  }
  return t;
}

}  // namespace detail

/// GPX 1.1: every trkpt of every trk/trkseg becomes one activity per <trk>.
inline std::vector<ActivityTrack> read_gpx(std::istream& in, const std::string& id) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::ParseError, id + ": " + e.what());
  }
  std::vector<ActivityTrack> out;
  const auto gpx = doc.get_child_optional("gpx");
  if (!gpx) throw Error(ErrorCode::ParseError, id + ": missing <gpx> root");
  std::size_t trk_index = 0;
  for (const auto& [tag, trk] : *gpx) {
    if (tag != "trk") continue;
    ActivityTrack track;
    track.id = trk_index == 0 ? id : id + "#" + std::to_string(trk_index);
    ++trk_index;
    std::optional<double> t0;
    for (const auto& [seg_tag, seg] : trk) {
      if (seg_tag != "trkseg") continue;
      for (const auto& [pt_tag, p] : seg) {
        if (pt_tag != "trkpt") continue;
        TrackPoint tp;
        tp.position.lat = p.get<double>("<xmlattr>.lat");
        tp.position.lon = p.get<double>("<xmlattr>.lon");
        if (auto ele = p.get_optional<double>("ele")) tp.position.ele = *ele;
        auto time = p.get_optional<std::string>("time");
        auto t = time ? detail::parse_iso8601(*time) : std::nullopt;
        if (!t) throw Error(ErrorCode::ParseError, track.id + ": trkpt without a valid <time>");
        if (!t0) t0 = *t;
        tp.t = *t - *t0;
        track.points.push_back(tp);
      }
    }
    out.push_back(std::move(track));
  }
  return out;
}

/// CSV rows: activity_id, seq, lon, lat, ele, t_rel_seconds (header optional).
inline std::vector<ActivityTrack> read_track_csv(std::istream& in) {
  std::map<std::string, std::vector<std::pair<long, TrackPoint>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() < 6) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 6 columns");
    try {
      TrackPoint tp;
      const long seq = std::stol(cols[1]);
      tp.position = {std::stod(cols[2]), std::stod(cols[3]), std::stod(cols[4])};
      tp.t = std::stod(cols[5]);
      rows[cols[0]].push_back({seq, tp});
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number");
    }
  }
  std::vector<ActivityTrack> out;
  for (auto& [id, pts] : rows) {
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    ActivityTrack track{id, {}};
    for (auto& [seq, p] : pts) track.points.push_back(p);
    out.push_back(std::move(track));
  }
  return out;
}

/// Reads every .gpx and .csv file in a directory, sorted by file name.
inline std::vector<ActivityTrack> read_tracks_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (ext == ".gpx" || ext == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ActivityTrack> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + f.string());
    auto tracks = f.extension() == ".gpx" ? read_gpx(in, f.stem().string()) : read_track_csv(in);
    for (auto& t : tracks) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace skiroute
