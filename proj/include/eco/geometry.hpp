#pragma once

#include <cmath>
#include <numbers>

namespace eco {

// Planar location in meters, east (x) / north (y).
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanarPoint& a, const PlanarPoint& b) {
    return a.x == b.x && a.y == b.y;
  }
};

inline constexpr double kEarthRadiusMeters = 6'371'000.0;

inline double squared_distance(const PlanarPoint& p, const PlanarPoint& q) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  return dx * dx + dy * dy;
}

inline double euclidean_distance(const PlanarPoint& p, const PlanarPoint& q) {
  return std::sqrt(squared_distance(p, q));
}

// Deterministic tie-break order: by x, then y.
inline bool lex_less(const PlanarPoint& a, const PlanarPoint& b) {
  if (a.x != b.x) return a.x < b.x;
  return a.y < b.y;
}

// Equirectangular projection around a fixed reference point. Adequate at
// city scale, where all the distance thresholds in this library live.
inline PlanarPoint project_to_plane(double lat, double lon, double ref_lat,
                                    double ref_lon) {
  const double rad = std::numbers::pi / 180.0;
  return PlanarPoint{
      kEarthRadiusMeters * (lon - ref_lon) * rad * std::cos(ref_lat * rad),
      kEarthRadiusMeters * (lat - ref_lat) * rad};
}

}  // namespace eco
