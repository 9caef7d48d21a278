/**
 * @file gam.hpp
 * @brief Logistic additive hazard for storm termination,
 *   logit p_t = b0 + sum_i s_i(nu_i),  t >= 8;  p_t = 0 otherwise,
 * with penalised cubic regression splines and GCV smoothing selection.
 */
#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "etcsim/bspline.hpp"

namespace etcsim {

class Catalog;
class StormTrack;

inline constexpr int kMinHazardAge = 8;

enum class GamCovariate { Vorticity, VorticityDrop, Age, Lon, Lat };

std::string to_string(GamCovariate c);
GamCovariate gam_covariate_from_string(const std::string& name);
std::vector<GamCovariate> default_gam_covariates();

/// Inputs for one step of one storm. Age is 1-based: the genesis point has age 1.
struct HazardInputs {
  double vorticity = 0.0;
  double vorticity_drop = 0.0;  ///< omega_{t-1} - omega_t
  double age = 0.0;
  double lon = 0.0;
  double lat = 0.0;

  double get(GamCovariate c) const noexcept;
};

/// Covariates of point `t` (0-based) of a track.
HazardInputs hazard_inputs(const StormTrack& track, std::size_t t);

struct GamData {
  std::vector<GamCovariate> covariates;
  Eigen::MatrixXd x;  ///< rows x covariates
  Eigen::VectorXd y;  ///< 1 at a storm's final point
  int excluded_storms = 0;
  std::vector<std::string> warnings;
};

/// One row per point of age >= min_age; storms with fewer than min_age + 1
/// points are excluded with a warning. Storms flagged in `censored` get only
/// outcome-0 rows.
GamData build_gam_data(std::span<const StormTrack> storms,
                       const std::vector<GamCovariate>& covariates = default_gam_covariates(),
                       std::span<const char> censored = {}, int min_age = kMinHazardAge);
GamData build_gam_data(const Catalog& catalog,
                       const std::vector<GamCovariate>& covariates = default_gam_covariates(),
                       int min_age = kMinHazardAge);

struct GamOptions {
  int interior_knots = 10;
  int grid_points = 41;
  double lambda_lo = 1e-4;
  double lambda_hi = 1e4;
  int sweeps = 2;
  double separation_limit = 50.0;
  int max_iterations = 100;
  /// Fixed smoothing parameters (one per smooth); empty means GCV selection.
  std::vector<double> fixed_lambda;
};

struct GamFit {
  std::vector<GamCovariate> covariates;
  std::vector<BSplineBasis> bases;
  double intercept = 0.0;
  std::vector<Eigen::VectorXd> smooth_coef;  ///< per smooth, in the B-spline basis
  std::vector<double> smoothing;             ///< selected lambda per smooth
  int min_age = kMinHazardAge;

  // Fit diagnostics.
  double gcv = 0.0;
  double deviance = 0.0;
  double edf = 0.0;
  double aic = 0.0;
  std::size_t n = 0;
  int iterations = 0;
  /// GCV over the lambda grid for each smooth, others held at their selection.
  std::vector<std::vector<double>> gcv_profile;
  std::vector<double> lambda_grid;

  double smooth(std::size_t k, double x) const;
  double linear_predictor(const HazardInputs& in) const;
  /// 0 for age < min_age, logistic(linear predictor) otherwise.
  double hazard(const HazardInputs& in) const;
};

GamFit fit_gam(const GamData& data, const GamOptions& options = {});

}  // namespace etcsim
