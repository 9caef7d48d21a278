/**
 * @file geometry.hpp
 * @brief Spherical-earth distance, bearing and destination calculations.
 */
#pragma once

#include <numbers>

namespace etcsim {

inline constexpr double kEarthRadiusM = 6'371'000.0;
/// Seconds between consecutive 3-hourly track points.
inline constexpr double kStepSeconds = 10'800.0;

struct LonLat {
  double lon{};  ///< degrees, normalised to [-180, 180)
  double lat{};  ///< degrees
};

double deg2rad(double deg) noexcept;
double rad2deg(double rad) noexcept;

/// Wraps degrees into [-180, 180).
double normalize_lon(double lon_deg) noexcept;
/// Wraps radians into [-pi, pi).
double wrap_angle(double rad) noexcept;

/// Great-circle distance in metres (atan2 form, stable at all separations).
double great_circle_distance(LonLat p, LonLat q) noexcept;

/// Initial bearing from p towards q, radians in [-pi, pi], 0 = north, pi/2 = east.
/// Throws ErrorKind::UndefinedBearing when p and q coincide.
double initial_bearing(LonLat p, LonLat q);

/// Point reached after travelling speed*dt metres from p along `bearing`.
/// Throws ErrorKind::PoleDegeneracy when the result lands on a pole.
LonLat destination_point(LonLat p, double speed_mps, double bearing_rad,
                         double dt_s = kStepSeconds);

}  // namespace etcsim
