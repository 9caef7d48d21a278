/**
 * @file evt.hpp
 * @brief Generalised Pareto tails, the kernel/GPD mixture marginal, Laplace
 * standardisation and threshold / dependence diagnostics.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "etcsim/kde.hpp"

namespace etcsim {

/// Below this |shape| the exponential limit is used.
inline constexpr double kShapeZeroTol = 1e-8;
/// Laplace values are clamped to +-700 when F reaches 0 or 1 numerically.
inline constexpr double kLaplaceClamp = 700.0;

struct GpdFit {
  double threshold = 0.0;       ///< u
  double scale = 1.0;           ///< psi_u
  double shape = 0.0;           ///< xi
  double exceed_rate = 0.0;     ///< lambda_u = 1 - F_kernel(u)
  double empirical_rate = 0.0;  ///< proportion of data above u
  int n_exceed = 0;
  double log_likelihood = 0.0;
  bool converged = false;

  /// Finite upper endpoint u - psi/xi when xi < 0.
  std::optional<double> upper_endpoint() const;
};

/// Pr(excess > z) = (1 + xi z / psi)_+^(-1/xi); exp(-z/psi) near xi = 0.
double gpd_survival(double scale, double shape, double excess) noexcept;
/// Excess whose survival probability is `survival` in (0, 1].
double gpd_excess_quantile(double scale, double shape, double survival) noexcept;
/// Log-likelihood of excesses; `resolution` > 0 treats each excess as
/// interval-censored to +-resolution/2.
double gpd_log_likelihood(std::span<const double> excesses, double scale, double shape,
                          double resolution = 0.0) noexcept;

struct GpdFitOptions {
  int restarts = 20;
  double tolerance = 1e-10;
  std::uint64_t seed = 0x9d2c5680u;
  double resolution = 0.0;   ///< censored variant when > 0
  int min_exceedances = 30;
};

/// Maximum-likelihood GPD fit to positive excesses (threshold left at 0).
GpdFit fit_gpd_excesses(std::span<const double> excesses, const GpdFitOptions& options = {});

/**
 * 1-D Gaussian kernel distribution function. Evaluated from a table built by
 * linear binning on a grid with spacing h/50 and linear interpolation between
 * nodes, which keeps CDF and quantile exact inverses of each other.
 */
class KernelCdf {
 public:
  KernelCdf() = default;
  /// `model` must be one-dimensional.
  explicit KernelCdf(const KdeModel& model);

  static KernelCdf fit(std::span<const double> data, double bandwidth_scale = 1.0);

  const KdeModel& model() const noexcept { return model_; }
  double bandwidth() const noexcept { return h_; }
  double operator()(double z) const noexcept;
  double quantile(double p) const noexcept;

 private:
  KdeModel model_;
  double h_ = 0.0;
  double lo_ = 0.0;
  double step_ = 1.0;
  std::vector<double> table_;
};

/// Threshold u and kernel body: lambda_u is computed from `body`.
GpdFit fit_gpd(std::span<const double> data, double threshold, const KernelCdf& body,
               const GpdFitOptions& options = {});
GpdFit fit_gpd(std::span<const double> data, double threshold, const GpdFitOptions& options = {});

/// Kernel CDF below u, GPD tail above.
class MixtureMarginal {
 public:
  MixtureMarginal() = default;
  MixtureMarginal(KernelCdf body, GpdFit gpd);

  const KernelCdf& body() const noexcept { return body_; }
  const GpdFit& gpd() const noexcept { return gpd_; }

  double cdf(double z) const noexcept;
  double survival(double z) const noexcept;
  double quantile(double p) const noexcept;
  double quantile_from_survival(double survival) const noexcept;

  double to_laplace(double z) const noexcept;
  double from_laplace(double s) const noexcept;

 private:
  KernelCdf body_;
  GpdFit gpd_;
};

/// Laplace value of a probability; guarded to +-700 at 0 and 1.
double laplace_from_cdf(double p, double survival) noexcept;

struct MrlRow {
  double threshold = 0.0;
  double mean_excess = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int n_exceed = 0;
};

/// Mean residual life table with normal-approximation 95% intervals. Thresholds
/// with fewer than `min_exceed` exceedances are omitted.
std::vector<MrlRow> mean_residual_life(std::span<const double> data,
                                       std::span<const double> thresholds, int min_exceed = 10);

/// Empirical Pr(Y > y_q | X > x_q) at quantile level q in (0.8, 1), with x_q
/// and y_q the empirical q-quantiles of each component. nullopt when no pair
/// exceeds the conditioning level.
std::optional<double> chi_tau(std::span<const double> x, std::span<const double> y, double q);

/// Type-7 empirical quantile.
double empirical_quantile(std::vector<double> values, double p);

}  // namespace etcsim
