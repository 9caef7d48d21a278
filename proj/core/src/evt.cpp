#include "etcsim/evt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "etcsim/errors.hpp"
#include "etcsim/optim.hpp"
#include "etcsim/rng.hpp"

namespace etcsim {

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

std::optional<double> GpdFit::upper_endpoint() const {
  if (shape < -kShapeZeroTol) return threshold - scale / shape;
  return std::nullopt;
}

double gpd_survival(double scale, double shape, double excess) noexcept {
  if (excess <= 0.0) return 1.0;
  if (std::abs(shape) < kShapeZeroTol) return std::exp(-excess / scale);
  const double t = 1.0 + shape * excess / scale;
  if (t <= 0.0) return 0.0;
  return std::exp(-std::log(t) / shape);
}

double gpd_excess_quantile(double scale, double shape, double survival) noexcept {
  if (survival >= 1.0) return 0.0;
  if (survival <= 0.0) {
    return shape < -kShapeZeroTol ? -scale / shape : std::numeric_limits<double>::infinity();
  }
  if (std::abs(shape) < kShapeZeroTol) return -scale * std::log(survival);
  return scale / shape * std::expm1(-shape * std::log(survival));
}

double gpd_log_likelihood(std::span<const double> excesses, double scale, double shape,
                          double resolution) noexcept {
  if (!(scale > 0.0) || !std::isfinite(shape)) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(excesses.size());
  if (resolution > 0.0) {
    double ll = 0.0;
    for (double y : excesses) {
      const double a = std::max(0.0, y - 0.5 * resolution);
      const double b = y + 0.5 * resolution;
      const double mass = gpd_survival(scale, shape, a) - gpd_survival(scale, shape, b);
      if (!(mass > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += std::log(mass);
    }
    return ll;
  }
  if (std::abs(shape) < kShapeZeroTol) {
    double s = 0.0;
    for (double y : excesses) s += y;
    return -n * std::log(scale) - s / scale;
  }
  double s = 0.0;
  for (double y : excesses) {
    const double t = shape * y / scale;
    if (t <= -1.0) return -std::numeric_limits<double>::infinity();
    s += std::log1p(t);
  }
  return -n * std::log(scale) - (1.0 + 1.0 / shape) * s;
}

GpdFit fit_gpd_excesses(std::span<const double> excesses, const GpdFitOptions& options) {
  if (static_cast<int>(excesses.size()) < options.min_exceedances) {
    throw Error(ErrorKind::InsufficientTail,
                "GPD fit needs at least " + std::to_string(options.min_exceedances) +
                    " exceedances, got " + std::to_string(excesses.size()));
  }
  double mean = 0.0;
  for (double y : excesses) {
    if (!(y >= 0.0) || !std::isfinite(y)) throw Error(ErrorKind::Argument, "excesses must be non-negative");
    mean += y;
  }
  mean /= static_cast<double>(excesses.size());
  double var = 0.0;
  for (double y : excesses) var += (y - mean) * (y - mean);
  var /= static_cast<double>(excesses.size() - 1);
  if (!(var > 0.0)) throw Error(ErrorKind::Fit, "excesses have zero variance");

  // Method-of-moments start.
  const double ratio = mean * mean / var;
  const double xi0 = std::clamp(0.5 * (1.0 - ratio), -0.9, 0.9);
  const double psi0 = std::max(0.5 * mean * (ratio + 1.0), 1e-8);

  const optim::Objective nll = [&](const std::vector<double>& p) {
    const double shape = p[1];
    if (shape <= -1.0 || shape > 10.0) return std::numeric_limits<double>::infinity();
    return -gpd_log_likelihood(excesses, std::exp(p[0]), shape, options.resolution);
  };
  optim::NelderMeadOptions nm;
  nm.ftol = options.tolerance;
  nm.xtol = 1e-12;
  nm.max_evals = 3000;

  Rng rng(options.seed);
  optim::MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    std::vector<double> start{std::log(psi0), xi0};
    if (r > 0) {
      start[0] += 0.5 * standard_normal(rng);
      start[1] = std::clamp(xi0 + 0.4 * (2.0 * uniform01(rng) - 1.0), -0.95, 2.0);
    }
    // Infeasible starts (support below the largest excess) are pulled inside.
    if (start[1] < 0.0) {
      const double ymax = *std::max_element(excesses.begin(), excesses.end());
      start[0] = std::max(start[0], std::log(-start[1] * ymax * 1.05));
    }
    const auto res = optim::nelder_mead(nll, start, {0.1, 0.05}, nm);
    any_converged = any_converged || (res.converged && std::isfinite(res.value));
    if (res.value < best.value) best = res;
  }
  if (!std::isfinite(best.value)) {
    throw Error(ErrorKind::Fit, "GPD likelihood is not finite at any start");
  }
  GpdFit fit;
  fit.scale = std::exp(best.x[0]);
  fit.shape = best.x[1];
  fit.n_exceed = static_cast<int>(excesses.size());
  fit.log_likelihood = -best.value;
  fit.converged = any_converged;
  if (!fit.converged) {
    throw Error(ErrorKind::Fit, "GPD optimiser did not converge (psi=" + std::to_string(fit.scale) +
                                    ", xi=" + std::to_string(fit.shape) + ")");
  }
  return fit;
}

KernelCdf::KernelCdf(const KdeModel& model) : model_(model) {
  if (model.dim() != 1) throw Error(ErrorKind::Shape, "kernel CDF needs a one-dimensional model");
  h_ = std::sqrt(model.bandwidth()(0, 0));
  const auto& x = model.samples();
  const double xmin = x.minCoeff();
  const double xmax = x.maxCoeff();
  lo_ = xmin - 9.0 * h_;
  const double hi = xmax + 9.0 * h_;
  step_ = std::max(h_ / 50.0, (hi - lo_) / 2.0e6);
  const auto m = static_cast<std::size_t>(std::ceil((hi - lo_) / step_)) + 1;

  std::vector<double> bins(m, 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double pos = (x(i, 0) - lo_) / step_;
    const auto j = std::min(static_cast<std::size_t>(pos), m - 2);
    const double frac = pos - static_cast<double>(j);
    bins[j] += 1.0 - frac;
    bins[j + 1] += frac;
  }
  const auto w = static_cast<long>(std::ceil(9.0 * h_ / step_));
  std::vector<double> kernel(static_cast<std::size_t>(2 * w + 1));
  for (long k = -w; k <= w; ++k) kernel[k + w] = std_normal_cdf(static_cast<double>(k) * step_ / h_);
  std::vector<double> prefix(m + 1, 0.0);
  for (std::size_t j = 0; j < m; ++j) prefix[j + 1] = prefix[j] + bins[j];

  const double n = static_cast<double>(x.rows());
  table_.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const long jl = static_cast<long>(j);
    const long b_lo = std::max(0L, jl - w);
    const long b_hi = std::min(static_cast<long>(m) - 1, jl + w);
    double acc = prefix[static_cast<std::size_t>(b_lo)];
    for (long b = b_lo; b <= b_hi; ++b) acc += bins[b] * kernel[jl - b + w];
    table_[j] = std::clamp(acc / n, 0.0, 1.0);
  }
  for (std::size_t j = 1; j < m; ++j) table_[j] = std::max(table_[j], table_[j - 1]);
}

KernelCdf KernelCdf::fit(std::span<const double> data, double bandwidth_scale) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()), 1);
  for (std::size_t i = 0; i < data.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = data[i];
  KdeOptions opt;
  opt.scale = bandwidth_scale;
  return KernelCdf(KdeModel::fit(m, opt));
}

double KernelCdf::operator()(double z) const noexcept {
  const double pos = (z - lo_) / step_;
  if (!(pos > 0.0)) return table_.front();
  const auto j = static_cast<std::size_t>(pos);
  if (j + 1 >= table_.size()) return table_.back();
  const double frac = pos - static_cast<double>(j);
  return table_[j] + frac * (table_[j + 1] - table_[j]);
}

double KernelCdf::quantile(double p) const noexcept {
  if (p <= table_.front()) return lo_;
  if (p >= table_.back()) return lo_ + step_ * static_cast<double>(table_.size() - 1);
  const auto it = std::lower_bound(table_.begin(), table_.end(), p);
  const auto j = static_cast<std::size_t>(it - table_.begin());
  const double f0 = table_[j - 1];
  const double f1 = table_[j];
  const double frac = f1 > f0 ? (p - f0) / (f1 - f0) : 1.0;
  return lo_ + step_ * (static_cast<double>(j - 1) + frac);
}

GpdFit fit_gpd(std::span<const double> data, double threshold, const KernelCdf& body,
               const GpdFitOptions& options) {
  std::vector<double> excesses;
  for (double z : data) {
    if (z > threshold) excesses.push_back(z - threshold);
  }
  GpdFit fit = fit_gpd_excesses(excesses, options);
  fit.threshold = threshold;
  fit.exceed_rate = 1.0 - body(threshold);
  fit.empirical_rate = static_cast<double>(excesses.size()) / static_cast<double>(data.size());
  if (!(fit.exceed_rate > 0.0 && fit.exceed_rate < 1.0)) {
    throw Error(ErrorKind::Fit, "kernel exceedance rate at the threshold is not in (0, 1)");
  }
  return fit;
}

GpdFit fit_gpd(std::span<const double> data, double threshold, const GpdFitOptions& options) {
  return fit_gpd(data, threshold, KernelCdf::fit(data), options);
}

MixtureMarginal::MixtureMarginal(KernelCdf body, GpdFit gpd) : body_(std::move(body)), gpd_(gpd) {}

double MixtureMarginal::cdf(double z) const noexcept {
  if (z <= gpd_.threshold) return body_(z);
  return 1.0 - survival(z);
}

double MixtureMarginal::survival(double z) const noexcept {
  if (z <= gpd_.threshold) return 1.0 - body_(z);
  return gpd_.exceed_rate * gpd_survival(gpd_.scale, gpd_.shape, z - gpd_.threshold);
}

double MixtureMarginal::quantile(double p) const noexcept {
  if (p > 1.0 - gpd_.exceed_rate) return quantile_from_survival(1.0 - p);
  return body_.quantile(p);
}

double MixtureMarginal::quantile_from_survival(double s) const noexcept {
  if (s < gpd_.exceed_rate) {
    return gpd_.threshold + gpd_excess_quantile(gpd_.scale, gpd_.shape, s / gpd_.exceed_rate);
  }
  return body_.quantile(1.0 - s);
}

double laplace_from_cdf(double p, double survival) noexcept {
  if (p < 0.5) {
    if (!(p > 0.0)) return -kLaplaceClamp;
    return std::max(-kLaplaceClamp, std::log(2.0 * p));
  }
  if (!(survival > 0.0)) return kLaplaceClamp;
  return std::min(kLaplaceClamp, -std::log(2.0 * survival));
}

double MixtureMarginal::to_laplace(double z) const noexcept {
  return laplace_from_cdf(cdf(z), survival(z));
}

double MixtureMarginal::from_laplace(double s) const noexcept {
  if (s < 0.0) return quantile(0.5 * std::exp(s));
  return quantile_from_survival(0.5 * std::exp(-s));
}

std::vector<MrlRow> mean_residual_life(std::span<const double> data,
                                       std::span<const double> thresholds, int min_exceed) {
  if (thresholds.empty()) throw Error(ErrorKind::Argument, "threshold grid is empty");
  std::vector<MrlRow> rows;
  for (double u : thresholds) {
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (double z : data) {
      if (z > u) {
        sum += z - u;
        sum2 += (z - u) * (z - u);
        ++n;
      }
    }
    if (n < std::max(min_exceed, 2)) continue;
    MrlRow row;
    row.threshold = u;
    row.n_exceed = n;
    row.mean_excess = sum / n;
    const double var = std::max(0.0, (sum2 - n * row.mean_excess * row.mean_excess) / (n - 1));
    const double half = 1.959963984540054 * std::sqrt(var / n);
    row.ci_lo = row.mean_excess - half;
    row.ci_hi = row.mean_excess + half;
    rows.push_back(row);
  }
  return rows;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::Argument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::optional<double> chi_tau(std::span<const double> x, std::span<const double> y, double q) {
  if (x.size() != y.size()) throw Error(ErrorKind::Shape, "chi_tau: series lengths differ");
  if (!(q > 0.8 && q < 1.0)) throw Error(ErrorKind::Argument, "chi_tau level must lie in (0.8, 1)");
  if (x.empty()) return std::nullopt;
  const double xq = empirical_quantile({x.begin(), x.end()}, q);
  const double yq = empirical_quantile({y.begin(), y.end()}, q);
  std::size_t cond = 0, joint = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > xq) {
      ++cond;
      if (y[i] > yq) ++joint;
    }
  }
  if (cond == 0) return std::nullopt;
  return static_cast<double>(joint) / static_cast<double>(cond);
}

}  // namespace etcsim
