#include "etcsim/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "etcsim/errors.hpp"

namespace etcsim {

namespace {
constexpr double kPi = std::numbers::pi;
// Latitudes closer than this to +-90 degrees cannot carry a longitude.
constexpr double kPoleTolDeg = 1e-9;
}  // namespace

double deg2rad(double deg) noexcept { return deg * kPi / 180.0; }
double rad2deg(double rad) noexcept { return rad * 180.0 / kPi; }

double normalize_lon(double lon_deg) noexcept {
  double x = std::fmod(lon_deg + 180.0, 360.0);
  if (x < 0.0) x += 360.0;
  x -= 180.0;
  return x >= 180.0 ? -180.0 : x;
}

double wrap_angle(double rad) noexcept {
  double x = std::fmod(rad + kPi, 2.0 * kPi);
  if (x < 0.0) x += 2.0 * kPi;
  x -= kPi;
  return x >= kPi ? -kPi : x;
}

double great_circle_distance(LonLat p, LonLat q) noexcept {
  const double phi1 = deg2rad(p.lat);
  const double phi2 = deg2rad(q.lat);
  const double dl = deg2rad(q.lon - p.lon);
  const double a = std::cos(phi2) * std::sin(dl);
  const double b = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dl);
  const double c = std::sin(phi1) * std::sin(phi2) + std::cos(phi1) * std::cos(phi2) * std::cos(dl);
  return kEarthRadiusM * std::atan2(std::hypot(a, b), c);
}

double initial_bearing(LonLat p, LonLat q) {
  const double phi1 = deg2rad(p.lat);
  const double phi2 = deg2rad(q.lat);
  const double dl = deg2rad(q.lon - p.lon);
  const double y = std::sin(dl) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dl);
  if (std::hypot(x, y) < 1e-15) {
    throw Error(ErrorKind::UndefinedBearing, "bearing between coincident points");
  }
  return std::atan2(y, x);
}

LonLat destination_point(LonLat p, double speed_mps, double bearing_rad, double dt_s) {
  if (speed_mps < 0.0 || dt_s <= 0.0) {
    throw Error(ErrorKind::Argument, "destination_point needs speed >= 0 and dt > 0");
  }
  if (speed_mps == 0.0) return LonLat{normalize_lon(p.lon), p.lat};
  const double delta = speed_mps * dt_s / kEarthRadiusM;
  const double phi1 = deg2rad(p.lat);
  const double sin_phi2 = std::sin(phi1) * std::cos(delta) +
                          std::cos(phi1) * std::sin(delta) * std::cos(bearing_rad);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lat2 = rad2deg(phi2);
  if (90.0 - std::abs(lat2) < kPoleTolDeg) {
    throw Error(ErrorKind::PoleDegeneracy, "destination falls on a pole");
  }
  const double dl = std::atan2(std::sin(bearing_rad) * std::sin(delta) * std::cos(phi1),
                               std::cos(delta) - std::sin(phi1) * sin_phi2);
  return LonLat{normalize_lon(p.lon + rad2deg(dl)), lat2};
}

}  // namespace etcsim
