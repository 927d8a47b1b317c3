#pragma once

#include <cmath>
#include <numbers>

namespace fairdvrp {

inline constexpr double kEarthRadiusMeters = 6371000.0;

struct LatLon {
  double lat{0.0};
  double lon{0.0};
};

/// Great-circle distance in meters between two points given in degrees.
inline double haversine(double lat1, double lon1, double lat2, double lon2) {
  constexpr double to_rad = std::numbers::pi / 180.0;
  const double phi1 = lat1 * to_rad;
  const double phi2 = lat2 * to_rad;
  const double dphi = (lat2 - lat1) * to_rad;
  const double dlambda = (lon2 - lon1) * to_rad;
  const double s_phi = std::sin(dphi / 2.0);
  const double s_lambda = std::sin(dlambda / 2.0);
  double a = s_phi * s_phi + std::cos(phi1) * std::cos(phi2) * s_lambda * s_lambda;
  a = std::fmin(1.0, std::fmax(0.0, a));
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(a));
}

inline double haversine(LatLon a, LatLon b) { return haversine(a.lat, a.lon, b.lat, b.lon); }

}  // namespace fairdvrp
