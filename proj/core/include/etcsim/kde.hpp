/**
 * @file kde.hpp
 * @brief Multivariate Gaussian kernel density estimation with joint and
 * conditional sampling.
 *
 * Circular dimensions (bearings) are handled by unrolling: every training tuple
 * is replicated with all circular coordinates shifted together by +2pi and
 * -2pi. The first circular dimension is the anchor and must lie in [-pi, pi];
 * further circular dimensions may hold values unwrapped relative to it. The
 * density keeps the 1/n normalisation of the original sample, so it integrates
 * to one over a single period.
 */
#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "etcsim/rng.hpp"

namespace etcsim {

enum class BandwidthStructure { Diagonal, Oriented };

struct KdeOptions {
  BandwidthStructure structure = BandwidthStructure::Oriented;
  double scale = 1.0;                 ///< multiplier on the rule-of-thumb bandwidth
  std::vector<int> circular_dims;     ///< unrolled by +-2pi, anchor first
  std::vector<int> independent_dims;  ///< bandwidth rows/cols kept diagonal
};

/// Scott's rule: scale^2 * n^(-2/(d+4)) * sample covariance.
Eigen::MatrixXd scott_bandwidth(const Eigen::MatrixXd& samples, const KdeOptions& options);

class KdeModel {
 public:
  KdeModel() = default;

  /// Fits with the rule-of-thumb bandwidth. Needs n >= 2.
  static KdeModel fit(const Eigen::MatrixXd& samples, const KdeOptions& options = {});

  /// Builds a model around an explicit bandwidth (n >= 1).
  static KdeModel with_bandwidth(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& bandwidth,
                                 const KdeOptions& options = {});

  int dim() const noexcept { return static_cast<int>(samples_.cols()); }
  /// Number of training tuples before unrolling.
  int size() const noexcept { return static_cast<int>(samples_.rows()); }
  bool empty() const noexcept { return samples_.rows() == 0; }

  /// n x d training tuples.
  const Eigen::MatrixXd& samples() const noexcept { return samples_; }
  const Eigen::MatrixXd& bandwidth() const noexcept { return bandwidth_; }
  const KdeOptions& options() const noexcept { return options_; }
  bool is_circular(int dim) const noexcept;

  /// d x N kernel centres after unrolling (N = n or 3n).
  const Eigen::MatrixXd& support() const noexcept { return support_; }

  double density(const Eigen::VectorXd& z) const;
  Eigen::VectorXd sample(Rng& rng) const;

 private:
  void build();

  Eigen::MatrixXd samples_;
  Eigen::MatrixXd bandwidth_;
  KdeOptions options_;
  Eigen::MatrixXd support_;
  Eigen::MatrixXd chol_;  ///< lower Cholesky factor of the bandwidth
  double log_norm_ = 0.0;
};

/// Weights w_i(z_given) over the unrolled kernel centres plus the shared
/// conditional covariance.
struct ConditionalDraw {
  Eigen::VectorXd conditioning;
  Eigen::VectorXd weights;     ///< non-negative, sums to one
  Eigen::MatrixXd covariance;  ///< H_mm - H_mg H_gg^-1 H_gm
};

/// Normalises log-weights with max subtraction. Returns an empty vector when
/// every entry is -inf.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/**
 * Conditional kernel estimator of `target` dimensions given `given`
 * dimensions; dimensions in neither set are marginalised out. Holds a
 * precomputed copy of everything it needs, so it stays valid independently of
 * the model it was built from.
 */
class ConditionalKde {
 public:
  ConditionalKde() = default;
  ConditionalKde(const KdeModel& model, std::vector<int> given, std::vector<int> target);

  const std::vector<int>& given() const noexcept { return given_; }
  const std::vector<int>& target() const noexcept { return target_; }

  /// Mixture weights and covariance for the supplied conditioning values.
  /// Throws ErrorKind::UnsupportedConditioning when every kernel underflows.
  ConditionalDraw weights(const Eigen::VectorXd& given_values) const;

  /// Mean of mixture component `i` for the supplied conditioning values.
  Eigen::VectorXd component_mean(int i, const Eigen::VectorXd& given_values) const;

  /// Draws target values; circular targets are wrapped to [-pi, pi).
  Eigen::VectorXd sample(const Eigen::VectorXd& given_values, Rng& rng) const;

  /// Draws from the target marginal, ignoring the conditioning.
  Eigen::VectorXd sample_marginal(Rng& rng) const;

  /// Conditional density of target values (unwrapped coordinates).
  double density(const Eigen::VectorXd& target_values, const Eigen::VectorXd& given_values) const;

  /// Kernel density of the given dimensions alone.
  double given_density(const Eigen::VectorXd& given_values) const;

 private:
  void log_kernels(const Eigen::VectorXd& given_values, std::vector<double>& out) const;
  Eigen::VectorXd draw_component(int i, const Eigen::VectorXd& given_values, Rng& rng) const;

  std::vector<int> given_;
  std::vector<int> target_;
  std::vector<char> target_circular_;
  int n_original_ = 0;
  Eigen::MatrixXd given_support_;    ///< |g| x N
  Eigen::MatrixXd given_whitened_;   ///< L_g^-1 applied to given_support_
  Eigen::MatrixXd given_chol_;       ///< L_g
  double given_log_norm_ = 0.0;
  Eigen::MatrixXd target_support_;   ///< |m| x N
  Eigen::MatrixXd regression_;       ///< H_mg H_gg^-1
  Eigen::MatrixXd cond_cov_;
  Eigen::MatrixXd cond_chol_;
  Eigen::MatrixXd marginal_chol_;    ///< Cholesky of H_mm
  double cond_log_norm_ = 0.0;
  bool degenerate_cov_ = false;
};

}  // namespace etcsim
