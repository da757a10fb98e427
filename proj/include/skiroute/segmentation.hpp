#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "skiroute/elevation.hpp"
#include "skiroute/error.hpp"
#include "skiroute/geo.hpp"
#include "skiroute/model.hpp"

namespace skiroute {

inline constexpr double kDefaultSegmentStep = 30.0;
inline constexpr double kEasyMaxSteepness = 25.0;
inline constexpr double kIntermediateMaxSteepness = 40.0;

namespace detail {

// Point at arc-length position s along a polyline with cumulative leg lengths.
inline GeoPoint point_at(std::span<const GeoPoint> line, std::span<const double> cumulative, double s) {
  if (s <= 0.0) return line.front();
  if (s >= cumulative.back()) return line.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cumulative.begin());  // leg (i-1, i)
  const double leg = cumulative[i] - cumulative[i - 1];
  const double t = leg > 0.0 ? (s - cumulative[i - 1]) / leg : 0.0;
  return interpolate(line[i - 1], line[i], t);
}

}  // namespace detail

/// Cuts a polyline into pieces of `step` meters by walking its arc length.
/// A trailing remainder shorter than step/2 is merged into the previous piece;
/// otherwise it becomes its own shorter piece. Lengths always sum to the
/// polyline length. Attributes are left unset.
inline std::vector<SubSegment> segmentize(std::span<const GeoPoint> line, double step = kDefaultSegmentStep) {
  if (line.size() < 2) throw Error(ErrorCode::DegenerateGeometry, "polyline needs at least two points");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "segment step must be positive");

  std::vector<double> cumulative(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) cumulative[i] = cumulative[i - 1] + distance(line[i - 1], line[i]);
  const double total = cumulative.back();
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "polyline has zero length");

  auto whole = static_cast<std::size_t>(std::floor(total / step));
  double remainder = total - static_cast<double>(whole) * step;
  if (remainder > step - 1e-9 * total) {  // floor() landed one short through rounding
    ++whole;
    remainder = 0.0;
  }

  std::vector<double> cuts{0.0};
  std::size_t inner = whole;  // number of interior cut points + 1
  if (whole == 0) {
    inner = 0;
  } else if (remainder < step / 2.0) {
    inner = whole - 1;
  }
  for (std::size_t i = 1; i <= inner; ++i) cuts.push_back(static_cast<double>(i) * step);
  cuts.push_back(total);

  std::vector<SubSegment> out;
  out.reserve(cuts.size() - 1);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    SubSegment seg;
    seg.index = k;
    seg.start = detail::point_at(line, cumulative, cuts[k]);
    seg.end = detail::point_at(line, cumulative, cuts[k + 1]);
    seg.mid = detail::point_at(line, cumulative, (cuts[k] + cuts[k + 1]) / 2.0);
    seg.length = cuts[k + 1] - cuts[k];
    out.push_back(seg);
  }
  return out;
}

/// Fills altitude, steepness and compass from the DEM. Sampling failures mark
/// the segment unattributed instead of throwing.
inline SubSegment attribute_segment(SubSegment seg, const ElevationGrid& grid) {
  seg.compass = compass_from_bearing(bearing(seg.start, seg.end));
  try {
    const double ele_start = sample_elevation(grid, seg.start);
    const double ele_end = sample_elevation(grid, seg.end);
    seg.altitude = sample_elevation(grid, seg.mid);
    seg.steepness = 100.0 * (ele_start - ele_end) / seg.length;
    seg.attributed = true;
  } catch (const Error&) {
    seg.attributed = false;
  }
  return seg;
}

/// Austrian piste thresholds: <=25 % easy, <=40 % intermediate, above advanced.
constexpr Difficulty classify_difficulty(double max_steepness) {
  if (max_steepness <= kEasyMaxSteepness) return Difficulty::easy;
  if (max_steepness <= kIntermediateMaxSteepness) return Difficulty::intermediate;
  return Difficulty::advanced;
}

// Max over downhill, attributed subsegments; 0 when nothing descends.
inline double max_downhill_steepness(std::span<const SubSegment> segments) {
  double best = 0.0;
  for (const auto& s : segments)
    if (s.attributed && s.steepness > best) best = s.steepness;
  return best;
}

struct SteepnessBand {
  double lo;
  double hi;
};

inline SteepnessBand difficulty_band(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return {0.0, kEasyMaxSteepness};
    case Difficulty::intermediate: return {kEasyMaxSteepness, kIntermediateMaxSteepness};
    case Difficulty::advanced: return {kIntermediateMaxSteepness, std::numeric_limits<double>::infinity()};
    case Difficulty::freeride: break;
  }
  throw Error(ErrorCode::NotApplicable, "freeride slopes have no steepness band");
}

/// Signed distance of a segment's steepness from its declared band: positive
/// when steeper than declared, negative when flatter, 0 inside.
inline double discrepancy(double steepness, Difficulty declared) {
  const auto band = difficulty_band(declared);
  if (steepness > band.hi) return steepness - band.hi;
  if (steepness < band.lo) return steepness - band.lo;
  return 0.0;
}

inline double discrepancy(const SubSegment& seg, Difficulty declared) {
  return discrepancy(seg.steepness, declared);
}

/// Segmentizes and attributes one edge in place. Slopes without a declared
/// difficulty receive one derived from their steepest downhill piece.
inline void attribute_edge(Edge& edge, const ElevationGrid& grid, double step = kDefaultSegmentStep) {
  edge.subsegments = segmentize(edge.geometry, step);
  for (auto& s : edge.subsegments) s = attribute_segment(s, grid);
  if (edge.is_slope() && !edge.difficulty_declared)
    edge.difficulty = classify_difficulty(max_downhill_steepness(edge.subsegments));
}

}  // namespace skiroute
