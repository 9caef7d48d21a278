/**
 * @file preprocess.hpp
 * @brief Box-Cox location-scale model that maps vorticity to approximately
 * stationary standard-normal residuals:
 *   (omega^lambda - 1) / lambda = mu(nu) + sigma(nu) W.
 * mu and log sigma are linear in the covariates nu (longitude, latitude,
 * sin/cos bearing, speed), optionally with quadratic longitude and latitude
 * terms chosen by a likelihood-ratio test.
 */
#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace etcsim {

class Catalog;
class StormTrack;

/// Open lon/lat box in which the preprocessing fit is valid.
struct Window {
  double lon_min = -60.0;
  double lon_max = 20.0;
  double lat_min = 40.0;
  double lat_max = 80.0;

  bool contains(double lon, double lat) const noexcept {
    return lon > lon_min && lon < lon_max && lat > lat_min && lat < lat_max;
  }
};

/// Covariates of one track point. Bearing in radians, speed in m/s.
struct PointCovariates {
  double lon = 0.0;
  double lat = 0.0;
  double bearing = 0.0;
  double speed = 0.0;
};

/// Point t takes the speed and bearing of the step that arrived at it
/// (t-1 -> t); the genesis point uses its outgoing step.
PointCovariates point_covariates(const StormTrack& track, std::size_t t);

enum class QuadraticTerms { Auto, Never, Always };

struct PreprocOptions {
  Window window;
  QuadraticTerms quadratic = QuadraticTerms::Auto;
  double lrt_level = 0.05;
  std::size_t min_points = 1000;
  double lambda_lo = -1.0;
  double lambda_hi = 2.0;
};

struct PreprocFit {
  double lambda = 1.0;
  bool quadratic = false;
  Eigen::VectorXd mu_coef;     ///< coefficients of mu on the design row
  Eigen::VectorXd sigma_coef;  ///< coefficients of log sigma
  /// Centre and scale of (lon, lat, speed) applied before building the design.
  std::vector<double> center{0.0, 0.0, 0.0};
  std::vector<double> scale{1.0, 1.0, 1.0};
  Window window;
  double log_likelihood = 0.0;
  std::size_t n = 0;
  double lrt_statistic = 0.0;  ///< quadratic vs linear, when tested
  double lrt_p_value = 1.0;

  Eigen::VectorXd design_row(const PointCovariates& nu) const;
  double mu(const PointCovariates& nu) const;
  double sigma(const PointCovariates& nu) const;
};

/// (omega^lambda - 1)/lambda, or log(omega) for |lambda| < 1e-8.
double box_cox(double omega, double lambda);
/// Inverse of box_cox; throws InvalidInverse outside the domain.
double inverse_box_cox(double y, double lambda);

/// Gaussian log-likelihood (with Box-Cox Jacobian) of `omega` under the
/// coefficients in `fit`.
double preprocess_log_likelihood(std::span<const double> omega,
                                 std::span<const PointCovariates> nu, const PreprocFit& fit);

/// Fits the model to the supplied points (already restricted to the window).
PreprocFit fit_preprocess(std::span<const double> omega, std::span<const PointCovariates> nu,
                          const PreprocOptions& options = {});

/// Collects the in-window points of a catalog and fits them.
PreprocFit fit_preprocess(const Catalog& catalog, const PreprocOptions& options = {});

double to_residual(double omega, const PointCovariates& nu, const PreprocFit& fit);
double from_residual(double w, const PointCovariates& nu, const PreprocFit& fit);

}  // namespace etcsim
