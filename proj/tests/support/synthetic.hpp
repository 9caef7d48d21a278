// Synthetic storm catalogs with known generating structure, used by the
// tests and benchmarks in place of reanalysis-derived tracks.
#pragma once

#include <cstdint>

#include "etcsim/catalog.hpp"

namespace etcsim::testing {

struct SyntheticSpec {
  int storms = 1000;
  double storms_per_year = 80.0;
  // Genesis box.
  double lon_lo = -65.0;
  double lon_hi = -30.0;
  double lat_mean = 46.0;
  double lat_sd = 4.0;
  // Mean bearing (radians from north) and AR(1) persistence.
  double bearing_mean = 1.2;
  double bearing_phi = 0.7;
  double bearing_sd = 0.25;
  // log speed AR(1) around log(speed_mean).
  double speed_mean = 12.0;
  double speed_phi = 0.8;
  double speed_sd = 0.2;
  // log vorticity AR(1).
  double vort_mean = 4.0;
  double vort_phi = 0.85;
  double vort_sd = 0.15;
  // Termination hazard from age 8: logistic(h0 + h_age * (age - 8) + h_drop * drop).
  double h0 = -2.8;
  double h_age = 0.05;
  double h_drop = 0.5;
  int max_age = 200;
};

Catalog make_synthetic_catalog(const SyntheticSpec& spec, std::uint64_t seed);

/// Small random catalog scattered over and around the default risk region:
/// 1-20 storms of 8-15 points, vorticity rounded to 0.5 so ties occur.
Catalog random_toy_catalog(std::uint64_t seed, double years_of_record = 10.0);

}  // namespace etcsim::testing
