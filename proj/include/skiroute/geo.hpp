#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace skiroute {

inline constexpr double kEarthRadius = 6371000.0;

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
  std::optional<double> ele;

  bool valid() const {
    return std::isfinite(lon) && std::isfinite(lat) && lon >= -180.0 && lon <= 180.0 &&
           lat >= -90.0 && lat <= 90.0;
  }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

using Polyline = std::vector<GeoPoint>;

inline constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Great-circle distance in meters on a sphere of radius kEarthRadius.
inline double distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = deg2rad(b.lon - a.lon);
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Initial bearing from a to b in degrees, [0, 360), clockwise from north.
inline double bearing(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double dlambda = deg2rad(b.lon - a.lon);
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  double deg = rad2deg(std::atan2(y, x));
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

// Linear interpolation in lon/lat; adequate for the sub-kilometre legs of a piste.
inline GeoPoint interpolate(const GeoPoint& a, const GeoPoint& b, double t) {
  GeoPoint p{a.lon + (b.lon - a.lon) * t, a.lat + (b.lat - a.lat) * t, std::nullopt};
  if (a.ele && b.ele) p.ele = *a.ele + (*b.ele - *a.ele) * t;
  return p;
}

inline double polyline_length(std::span<const GeoPoint> line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += distance(line[i - 1], line[i]);
  return total;
}

struct Vec2 {
  double x = 0.0;  // east, meters
  double y = 0.0;  // north, meters
};

/// Equirectangular tangent-plane projection around a reference point. Used for
/// point-to-line projections where a planar approximation is sufficient.
class LocalFrame {
 public:
  LocalFrame() = default;
  explicit LocalFrame(const GeoPoint& origin)
      : origin_(origin), kx_(deg2rad(1.0) * kEarthRadius * std::cos(deg2rad(origin.lat))),
        ky_(deg2rad(1.0) * kEarthRadius) {}

  Vec2 to_local(const GeoPoint& p) const {
    return {(p.lon - origin_.lon) * kx_, (p.lat - origin_.lat) * ky_};
  }

  GeoPoint to_geo(const Vec2& v) const {
    return {origin_.lon + v.x / kx_, origin_.lat + v.y / ky_, std::nullopt};
  }

  const GeoPoint& origin() const { return origin_; }
  double meters_per_deg_lon() const { return kx_; }
  double meters_per_deg_lat() const { return ky_; }

 private:
  GeoPoint origin_{};
  double kx_ = 1.0;
  double ky_ = 1.0;
};

struct Projection {
  double distance = std::numeric_limits<double>::infinity();  // perpendicular, meters
  double arc_position = 0.0;  // meters along the polyline to the foot point
};

/// Closest point on a polyline (given in local coordinates with cumulative leg
/// lengths) to a query point.
inline Projection project_onto(std::span<const Vec2> line, std::span<const double> cumulative, Vec2 q) {
  Projection best;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 a = line[i - 1];
    const Vec2 b = line[i];
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((q.x - a.x) * dx + (q.y - a.y) * dy) / len2, 0.0, 1.0);
    const double px = a.x + t * dx;
    const double py = a.y + t * dy;
    const double d = std::hypot(q.x - px, q.y - py);
    if (d < best.distance) {
      best.distance = d;
      best.arc_position = cumulative[i - 1] + t * (cumulative[i] - cumulative[i - 1]);
    }
  }
  return best;
}

/// A polyline pre-projected into a local frame, with planar cumulative lengths.
struct LocalPolyline {
  std::vector<Vec2> points;
  std::vector<double> cumulative;

  LocalPolyline() = default;
  LocalPolyline(const LocalFrame& frame, std::span<const GeoPoint> line) {
    points.reserve(line.size());
    cumulative.reserve(line.size());
    for (const auto& p : line) {
      const Vec2 v = frame.to_local(p);
      cumulative.push_back(points.empty() ? 0.0
                                          : cumulative.back() + std::hypot(v.x - points.back().x,
                                                                           v.y - points.back().y));
      points.push_back(v);
    }
  }

  double length() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
  Projection project(Vec2 q) const { return project_onto(points, cumulative, q); }
};

}  // namespace skiroute
