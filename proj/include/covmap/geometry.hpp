#pragma once

// Planar primitives for the hull baseline: points, CCW polygons, Andrew's
// monotone chain, boundary-inclusive point-in-polygon, and the local
// equirectangular projection used when training in metres.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace covmap {

struct PlanarPoint {
  double x = 0.0;  // lon degrees, or metres east in projected mode
  double y = 0.0;  // lat degrees, or metres north

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
  friend auto operator<=>(const PlanarPoint&, const PlanarPoint&) = default;
};

/// Counter-clockwise ring, closed implicitly (last vertex connects to first).
struct Polygon {
  std::vector<PlanarPoint> vertices;

  std::size_t size() const { return vertices.size(); }
};

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(const PlanarPoint& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

class DegenerateHullError : public std::runtime_error {
 public:
  explicit DegenerateHullError(std::size_t point_count)
      : std::runtime_error("degenerate hull: " + std::to_string(point_count) +
                           " point(s), fewer than 3 or all collinear"),
        point_count_(point_count) {}

  std::size_t point_count() const { return point_count_; }

 private:
  std::size_t point_count_;
};

/// Cross products below this magnitude (coordinate units squared) count as collinear.
inline constexpr double kCollinearEpsilon = 1e-12;

inline double squared_distance(const PlanarPoint& a, const PlanarPoint& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// z-component of (a - o) x (b - o); positive for a left turn o -> a -> b.
inline double cross(const PlanarPoint& o, const PlanarPoint& a, const PlanarPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Shoelace area, positive for counter-clockwise rings.
inline double signed_area(std::span<const PlanarPoint> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const PlanarPoint& a = ring[i];
    const PlanarPoint& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

inline double signed_area(const Polygon& poly) { return signed_area(poly.vertices); }

inline BoundingBox bounding_box(std::span<const PlanarPoint> points) {
  if (points.empty()) throw std::invalid_argument("bounding_box of empty point set");
  BoundingBox box{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const auto& p : points) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_y = std::min(box.min_y, p.y);
    box.max_x = std::max(box.max_x, p.x);
    box.max_y = std::max(box.max_y, p.y);
  }
  return box;
}

/// Grows the box by `fraction` of its extent on every side. Zero-extent axes
/// are padded by `min_pad` instead.
inline BoundingBox expand(const BoundingBox& box, double fraction, double min_pad = 1e-6) {
  const double px = std::max(box.width() * fraction, min_pad);
  const double py = std::max(box.height() * fraction, min_pad);
  return {box.min_x - px, box.min_y - py, box.max_x + px, box.max_y + py};
}

/// Strict convex hull by Andrew's monotone chain.
///
/// Vertices are returned counter-clockwise starting at the lexicographically
/// smallest point; points on hull edges (within kCollinearEpsilon) are dropped.
/// Throws DegenerateHullError when fewer than three points remain in hull
/// position.
inline Polygon convex_hull(std::span<const PlanarPoint> points) {
  std::vector<PlanarPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) throw DegenerateHullError(points.size());

  std::vector<PlanarPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= kCollinearEpsilon) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= kCollinearEpsilon) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);  // last point repeats the first
  if (hull.size() < 3) throw DegenerateHullError(points.size());
  return Polygon{std::move(hull)};
}

inline Polygon convex_hull(const std::vector<PlanarPoint>& points) {
  return convex_hull(std::span<const PlanarPoint>(points));
}

namespace detail {

inline bool on_segment(const PlanarPoint& p, const PlanarPoint& a, const PlanarPoint& b) {
  if (std::abs(cross(a, b, p)) > kCollinearEpsilon) return false;
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) &&
         p.y >= std::min(a.y, b.y) && p.y <= std::max(a.y, b.y);
}

}  // namespace detail

/// Boundary-inclusive membership by ray casting. Works for any simple ring,
/// convex or not, in either orientation.
inline bool point_in_ring(const PlanarPoint& p, std::span<const PlanarPoint> ring) {
  const std::size_t n = ring.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const PlanarPoint& a = ring[i];
    const PlanarPoint& b = ring[j];
    if (detail::on_segment(p, a, b)) return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_at) inside = !inside;
    }
  }
  return inside;
}

inline bool point_in_polygon(const PlanarPoint& p, const Polygon& poly) {
  return point_in_ring(p, poly.vertices);
}

// Local equirectangular projection around an origin, in metres.
struct Equirectangular {
  static constexpr double kEarthRadiusM = 6371008.8;

  double lon0 = 0.0;
  double lat0 = 0.0;

  PlanarPoint forward(double lon, double lat) const {
    constexpr double k = std::numbers::pi / 180.0;
    return {kEarthRadiusM * (lon - lon0) * k * std::cos(lat0 * k),
            kEarthRadiusM * (lat - lat0) * k};
  }

  PlanarPoint inverse(const PlanarPoint& p) const {
    constexpr double k = std::numbers::pi / 180.0;
    return {lon0 + p.x / (kEarthRadiusM * k * std::cos(lat0 * k)),
            lat0 + p.y / (kEarthRadiusM * k)};
  }
};

/// Working coordinate frame of a trained boundary: raw lon/lat degrees, or a
/// local projection in metres centred on `origin`.
struct CoordinateFrame {
  enum class Mode { degrees, projected };

  Mode mode = Mode::degrees;
  Equirectangular projection{};

  static CoordinateFrame degrees() { return {}; }
  static CoordinateFrame projected(double lon0, double lat0) {
    return {Mode::projected, Equirectangular{lon0, lat0}};
  }

  PlanarPoint to_frame(double lon, double lat) const {
    return mode == Mode::degrees ? PlanarPoint{lon, lat} : projection.forward(lon, lat);
  }
  PlanarPoint to_frame(const PlanarPoint& lonlat) const { return to_frame(lonlat.x, lonlat.y); }
  PlanarPoint to_lonlat(const PlanarPoint& p) const {
    return mode == Mode::degrees ? p : projection.inverse(p);
  }

  friend bool operator==(const CoordinateFrame& a, const CoordinateFrame& b) {
    if (a.mode != b.mode) return false;
    return a.mode == Mode::degrees ||
           (a.projection.lon0 == b.projection.lon0 && a.projection.lat0 == b.projection.lat0);
  }
};

inline PlanarPoint centroid(std::span<const PlanarPoint> points) {
  if (points.empty()) throw std::invalid_argument("centroid of empty point set");
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    sx += p.x;
    sy += p.y;
  }
  const auto n = static_cast<double>(points.size());
  return {sx / n, sy / n};
}

}  // namespace covmap
