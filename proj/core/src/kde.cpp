#include "etcsim/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "etcsim/errors.hpp"
#include "etcsim/geometry.hpp"

namespace etcsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Kernel values below 1e-300 count as zero support.
const double kLogUnderflow = std::log(1e-300);

Eigen::MatrixXd lower_cholesky(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularBandwidth, std::string(what) + " is not positive definite");
  }
  Eigen::MatrixXd l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
      throw Error(ErrorKind::SingularBandwidth, std::string(what) + " is singular");
    }
  }
  return l;
}

double log_det_from_chol(const Eigen::MatrixXd& l) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                       const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd scott_bandwidth(const Eigen::MatrixXd& samples, const KdeOptions& options) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw Error(ErrorKind::Argument, "kernel density fit needs at least two samples");
  if (!(options.scale > 0.0) || !std::isfinite(options.scale)) {
    throw Error(ErrorKind::SingularBandwidth, "bandwidth scale must be positive");
  }
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  if (options.structure == BandwidthStructure::Diagonal) {
    cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
  } else {
    for (int k : options.independent_dims) {
      for (Eigen::Index j = 0; j < d; ++j) {
        if (j == k) continue;
        cov(k, j) = 0.0;
        cov(j, k) = 0.0;
      }
    }
  }
  const double factor = options.scale * options.scale *
                        std::pow(static_cast<double>(n), -2.0 / (static_cast<double>(d) + 4.0));
  return factor * cov;
}

KdeModel KdeModel::fit(const Eigen::MatrixXd& samples, const KdeOptions& options) {
  return with_bandwidth(samples, scott_bandwidth(samples, options), options);
}

KdeModel KdeModel::with_bandwidth(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& bandwidth,
                                  const KdeOptions& options) {
  if (samples.rows() < 1 || samples.cols() < 1) {
    throw Error(ErrorKind::Shape, "kernel density model needs at least one sample");
  }
  if (bandwidth.rows() != samples.cols() || bandwidth.cols() != samples.cols()) {
    throw Error(ErrorKind::Shape, "bandwidth does not match sample dimension");
  }
  if (!samples.allFinite()) throw Error(ErrorKind::Argument, "non-finite kernel training value");
  for (int c : options.circular_dims) {
    if (c < 0 || c >= samples.cols()) throw Error(ErrorKind::Shape, "circular dimension out of range");
  }
  if (!options.circular_dims.empty()) {
    const auto anchor = samples.col(options.circular_dims.front());
    const double pi = std::numbers::pi + 1e-12;
    if (anchor.minCoeff() < -pi || anchor.maxCoeff() > pi) {
      throw Error(ErrorKind::Argument, "circular training values must lie in [-pi, pi]");
    }
  }
  KdeModel m;
  m.samples_ = samples;
  m.bandwidth_ = 0.5 * (bandwidth + bandwidth.transpose());
  m.options_ = options;
  m.build();
  return m;
}

bool KdeModel::is_circular(int d) const noexcept {
  return std::find(options_.circular_dims.begin(), options_.circular_dims.end(), d) !=
         options_.circular_dims.end();
}

void KdeModel::build() {
  chol_ = lower_cholesky(bandwidth_, "bandwidth matrix");
  const int d = dim();
  log_norm_ = -0.5 * d * std::log(kTwoPi) - 0.5 * log_det_from_chol(chol_);
  const Eigen::MatrixXd base = samples_.transpose();
  if (options_.circular_dims.empty()) {
    support_ = base;
    return;
  }
  const Eigen::Index n = base.cols();
  support_.resize(d, 3 * n);
  support_.leftCols(n) = base;
  Eigen::MatrixXd up = base, down = base;
  for (int c : options_.circular_dims) {
    up.row(c).array() += kTwoPi;
    down.row(c).array() -= kTwoPi;
  }
  support_.middleCols(n, n) = up;
  support_.rightCols(n) = down;
}

double KdeModel::density(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) throw Error(ErrorKind::Shape, "density: dimension mismatch");
  Eigen::VectorXd w = z;
  for (int c : options_.circular_dims) w[c] = wrap_angle(w[c]);
  const Eigen::MatrixXd diff = support_.colwise() - w;
  const Eigen::MatrixXd white = chol_.triangularView<Eigen::Lower>().solve(diff);
  const Eigen::VectorXd q = white.colwise().squaredNorm();
  double total = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) total += std::exp(log_norm_ - 0.5 * q[i]);
  return total / static_cast<double>(size());
}

Eigen::VectorXd KdeModel::sample(Rng& rng) const {
  std::uniform_int_distribution<int> pick(0, size() - 1);
  const int i = pick(rng);
  Eigen::VectorXd eps(dim());
  for (int j = 0; j < dim(); ++j) eps[j] = standard_normal(rng);
  Eigen::VectorXd z = samples_.row(i).transpose() + chol_ * eps;
  for (int c : options_.circular_dims) z[c] = wrap_angle(z[c]);
  return z;
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return {};
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - mx);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

ConditionalKde::ConditionalKde(const KdeModel& model, std::vector<int> given, std::vector<int> target)
    : given_(std::move(given)), target_(std::move(target)) {
  const int d = model.dim();
  auto check = [d](const std::vector<int>& dims) {
    for (int v : dims) {
      if (v < 0 || v >= d) throw Error(ErrorKind::Shape, "conditional dimension out of range");
    }
  };
  check(given_);
  check(target_);
  if (target_.empty()) throw Error(ErrorKind::Shape, "conditional model needs a target dimension");
  for (int t : target_) {
    if (std::find(given_.begin(), given_.end(), t) != given_.end()) {
      throw Error(ErrorKind::Shape, "dimension both given and target");
    }
  }
  n_original_ = model.size();
  const Eigen::MatrixXd& h = model.bandwidth();
  const Eigen::MatrixXd& support = model.support();
  const Eigen::Index big_n = support.cols();

  target_circular_.resize(target_.size());
  for (std::size_t j = 0; j < target_.size(); ++j) target_circular_[j] = model.is_circular(target_[j]);

  target_support_.resize(static_cast<Eigen::Index>(target_.size()), big_n);
  for (std::size_t j = 0; j < target_.size(); ++j) target_support_.row(j) = support.row(target_[j]);

  const Eigen::MatrixXd h_mm = select(h, target_, target_);
  {
    Eigen::LLT<Eigen::MatrixXd> ml(h_mm);
    if (ml.info() == Eigen::Success) marginal_chol_ = ml.matrixL();
  }
  if (given_.empty()) {
    cond_cov_ = h_mm;
    regression_.resize(static_cast<Eigen::Index>(target_.size()), 0);
  } else {
    given_support_.resize(static_cast<Eigen::Index>(given_.size()), big_n);
    for (std::size_t j = 0; j < given_.size(); ++j) given_support_.row(j) = support.row(given_[j]);
    const Eigen::MatrixXd h_gg = select(h, given_, given_);
    const Eigen::MatrixXd h_mg = select(h, target_, given_);
    given_chol_ = lower_cholesky(h_gg, "conditioning bandwidth block");
    given_log_norm_ = -0.5 * static_cast<double>(given_.size()) * std::log(kTwoPi) -
                      0.5 * log_det_from_chol(given_chol_);
    given_whitened_ = given_chol_.triangularView<Eigen::Lower>().solve(given_support_);
    const Eigen::LLT<Eigen::MatrixXd> llt(h_gg);
    regression_ = llt.solve(h_mg.transpose()).transpose();
    cond_cov_ = h_mm - regression_ * h_mg.transpose();
    cond_cov_ = 0.5 * (cond_cov_ + cond_cov_.transpose());
  }
  Eigen::LLT<Eigen::MatrixXd> cc(cond_cov_);
  bool ok = cc.info() == Eigen::Success;
  if (ok) {
    cond_chol_ = cc.matrixL();
    for (Eigen::Index i = 0; i < cond_chol_.rows(); ++i) ok = ok && cond_chol_(i, i) > 0.0;
  }
  if (ok) {
    cond_log_norm_ = -0.5 * static_cast<double>(target_.size()) * std::log(kTwoPi) -
                     0.5 * log_det_from_chol(cond_chol_);
  } else {
    degenerate_cov_ = true;
    cond_chol_ = Eigen::MatrixXd::Zero(cond_cov_.rows(), cond_cov_.cols());
  }
}

void ConditionalKde::log_kernels(const Eigen::VectorXd& given_values, std::vector<double>& out) const {
  const Eigen::Index big_n = target_support_.cols();
  out.resize(static_cast<std::size_t>(big_n));
  if (given_.empty()) {
    // Unconditional: uniform over the original tuples.
    for (Eigen::Index i = 0; i < big_n; ++i) out[i] = i < n_original_ ? 0.0 : -INFINITY;
    return;
  }
  if (given_values.size() != static_cast<Eigen::Index>(given_.size())) {
    throw Error(ErrorKind::Shape, "conditioning vector has wrong dimension");
  }
  const Eigen::VectorXd g = given_chol_.triangularView<Eigen::Lower>().solve(given_values);
  const Eigen::Index k = g.size();
  const double* col = given_whitened_.data();
  for (Eigen::Index i = 0; i < big_n; ++i, col += k) {
    double q = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double r = g[j] - col[j];
      q += r * r;
    }
    out[i] = given_log_norm_ - 0.5 * q;
  }
}

ConditionalDraw ConditionalKde::weights(const Eigen::VectorXd& given_values) const {
  std::vector<double> lk;
  log_kernels(given_values, lk);
  const double mx = lk.empty() ? -INFINITY : *std::max_element(lk.begin(), lk.end());
  if (!(mx >= kLogUnderflow)) {
    throw Error(ErrorKind::UnsupportedConditioning, "all kernel weights underflow");
  }
  const auto w = normalize_log_weights(lk);
  ConditionalDraw draw;
  draw.conditioning = given_values;
  draw.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  draw.covariance = cond_cov_;
  return draw;
}

Eigen::VectorXd ConditionalKde::component_mean(int i, const Eigen::VectorXd& given_values) const {
  Eigen::VectorXd mu = target_support_.col(i);
  if (!given_.empty()) mu += regression_ * (given_values - given_support_.col(i));
  return mu;
}

Eigen::VectorXd ConditionalKde::draw_component(int i, const Eigen::VectorXd& given_values, Rng& rng) const {
  Eigen::VectorXd z = component_mean(i, given_values);
  if (!degenerate_cov_) {
    Eigen::VectorXd eps(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) eps[j] = standard_normal(rng);
    z += cond_chol_ * eps;
  }
  for (std::size_t j = 0; j < target_.size(); ++j) {
    if (target_circular_[j]) z[j] = wrap_angle(z[j]);
  }
  return z;
}

Eigen::VectorXd ConditionalKde::sample(const Eigen::VectorXd& given_values, Rng& rng) const {
  if (given_.empty()) return sample_marginal(rng);
  std::vector<double> lk;
  log_kernels(given_values, lk);
  const double mx = *std::max_element(lk.begin(), lk.end());
  if (!(mx >= kLogUnderflow)) {
    throw Error(ErrorKind::UnsupportedConditioning, "all kernel weights underflow");
  }
  double total = 0.0;
  for (double& v : lk) {
    v = std::exp(v - mx);
    total += v;
  }
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int chosen = static_cast<int>(lk.size()) - 1;
  for (std::size_t i = 0; i < lk.size(); ++i) {
    acc += lk[i];
    if (u < acc) {
      chosen = static_cast<int>(i);
      break;
    }
  }
  return draw_component(chosen, given_values, rng);
}

Eigen::VectorXd ConditionalKde::sample_marginal(Rng& rng) const {
  std::uniform_int_distribution<int> pick(0, n_original_ - 1);
  const int i = pick(rng);
  Eigen::VectorXd z = target_support_.col(i);
  if (marginal_chol_.size() > 0) {
    Eigen::VectorXd eps(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) eps[j] = standard_normal(rng);
    z += marginal_chol_ * eps;
  }
  for (std::size_t j = 0; j < target_.size(); ++j) {
    if (target_circular_[j]) z[j] = wrap_angle(z[j]);
  }
  return z;
}

double ConditionalKde::density(const Eigen::VectorXd& target_values,
                               const Eigen::VectorXd& given_values) const {
  if (target_values.size() != static_cast<Eigen::Index>(target_.size())) {
    throw Error(ErrorKind::Shape, "target vector has wrong dimension");
  }
  if (degenerate_cov_) throw Error(ErrorKind::SingularBandwidth, "conditional covariance is singular");
  const ConditionalDraw draw = weights(given_values);
  double total = 0.0;
  for (Eigen::Index i = 0; i < draw.weights.size(); ++i) {
    const double w = draw.weights[i];
    if (w == 0.0) continue;
    const Eigen::VectorXd r = cond_chol_.triangularView<Eigen::Lower>().solve(
        target_values - component_mean(static_cast<int>(i), given_values));
    total += w * std::exp(cond_log_norm_ - 0.5 * r.squaredNorm());
  }
  return total;
}

double ConditionalKde::given_density(const Eigen::VectorXd& given_values) const {
  if (given_.empty()) return 1.0;
  std::vector<double> lk;
  log_kernels(given_values, lk);
  double total = 0.0;
  for (double v : lk) total += std::exp(v);
  return total / static_cast<double>(n_original_);
}

}  // namespace etcsim
