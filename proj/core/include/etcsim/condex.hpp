/**
 * @file condex.hpp
 * @brief Conditional-extremes dependence model on Laplace margins and the
 * kth-order tail chain used to simulate runs of extreme values.
 *
 * For a conditioning exceedance S_t > u_L the model is
 *   S_{t+j} = alpha_j S_t + S_t^{beta_j} e_j,  j = 1..k,
 * with (alpha_j, beta_j) in [-1,1] x [0,1] and e_{1:k} drawn from a kernel
 * estimate of the fitted residual vectors.
 */
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etcsim/kde.hpp"
#include "etcsim/rng.hpp"

namespace etcsim {

struct CondExOptions {
  int min_events = 50;
  double bandwidth_scale = 1.0;  ///< residual kernel bandwidth multiplier
};

struct CondExFit {
  int order = 3;                 ///< k
  double threshold = 0.0;        ///< u_L on the Laplace scale
  std::vector<double> alpha;     ///< alpha_{1:k}
  std::vector<double> beta;      ///< beta_{1:k}
  std::vector<bool> boundary;    ///< alpha_j at +-1
  Eigen::MatrixXd residuals;     ///< events x k
  double bandwidth_scale = 1.0;
  std::optional<KdeModel> residual_kde;  ///< empty when residuals are degenerate
  std::vector<std::string> warnings;

  int events() const noexcept { return static_cast<int>(residuals.rows()); }
};

/// Profile Gaussian negative log-likelihood of one lag, up to a constant.
double condex_profile_nll(std::span<const double> x, std::span<const double> y, double alpha,
                          double beta);

/// Fits lag by lag. Each series is one storm (or one contiguous segment);
/// events need k following values inside the same series.
CondExFit fit_condex(const std::vector<std::vector<double>>& laplace_series, int order,
                     double threshold, const CondExOptions& options = {});

/// Rebuilds the residual kernel from `fit.residuals` (used after loading).
void rebuild_residual_kde(CondExFit& fit);

/// l = max{i <= k : min(last i values) > u_L}; nullopt when the most recent
/// value does not exceed u_L. `recent` is oldest first.
std::optional<int> effective_order(std::span<const double> recent, double threshold, int order);

struct TailChainState {
  std::vector<double> recent;  ///< last values, oldest first
  int effective_order = 1;
};

/**
 * Simulates S_j = alpha_l S_{j-l} + S_{j-l}^{beta_l} e, with e drawn from the
 * residual kernel conditioned on the l-1 residuals implied by the values
 * between S_{j-l} and S_j.
 */
class TailChain {
 public:
  TailChain() = default;
  explicit TailChain(CondExFit fit);

  const CondExFit& fit() const noexcept { return fit_; }

  /// `fell_back` is set when the conditioning residuals lay outside the
  /// kernel support and an unconditional draw was used instead.
  double step(const TailChainState& state, Rng& rng, bool* fell_back = nullptr) const;

  /// Residuals implied by `recent` for a step of effective order l.
  Eigen::VectorXd implied_residuals(const TailChainState& state) const;

 private:
  double draw_unconditional(int lag, Rng& rng) const;

  CondExFit fit_;
  std::vector<ConditionalKde> conditionals_;  ///< index l-1
};

}  // namespace etcsim
