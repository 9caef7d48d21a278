#include "etcsim/condex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "etcsim/errors.hpp"
#include "etcsim/optim.hpp"

namespace etcsim {

namespace {

bool identical_lag(std::span<const double> x, std::span<const double> y) {
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(y[i] - x[i]) > 1e-12 * (1.0 + scale)) return false;
  }
  return true;
}

}  // namespace

double condex_profile_nll(std::span<const double> x, std::span<const double> y, double alpha,
                          double beta) {
  const auto n = static_cast<double>(x.size());
  double sum_logx = 0.0, mean = 0.0;
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    sum_logx += lx;
    z[i] = (y[i] - alpha * x[i]) * std::exp(-beta * lx);
    mean += z[i];
  }
  mean /= n;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) return std::numeric_limits<double>::infinity();
  return beta * sum_logx + 0.5 * n * std::log(var);
}

CondExFit fit_condex(const std::vector<std::vector<double>>& laplace_series, int order,
                     double threshold, const CondExOptions& options) {
  if (order < 1) throw Error(ErrorKind::Argument, "conditional-extremes order must be >= 1");
  if (!std::isfinite(threshold) || threshold <= 0.0) {
    throw Error(ErrorKind::Argument, "Laplace threshold must be positive and finite");
  }
  std::vector<double> x;
  std::vector<std::vector<double>> y(static_cast<std::size_t>(order));
  for (const auto& s : laplace_series) {
    for (std::size_t t = 0; t + static_cast<std::size_t>(order) < s.size(); ++t) {
      if (!(s[t] > threshold)) continue;
      x.push_back(s[t]);
      for (int j = 1; j <= order; ++j) y[j - 1].push_back(s[t + j]);
    }
  }
  if (static_cast<int>(x.size()) < options.min_events) {
    throw Error(ErrorKind::InsufficientTail,
                "conditional extremes needs " + std::to_string(options.min_events) +
                    " conditioning events, got " + std::to_string(x.size()));
  }

  CondExFit fit;
  fit.order = order;
  fit.threshold = threshold;
  fit.bandwidth_scale = options.bandwidth_scale;
  fit.residuals.resize(static_cast<Eigen::Index>(x.size()), order);

  for (int j = 0; j < order; ++j) {
    const auto& yj = y[j];
    double a = 1.0, b = 0.0;
    if (!identical_lag(x, yj)) {
      auto nll = [&](const std::vector<double>& p) { return condex_profile_nll(x, yj, p[0], p[1]); };
      double best = std::numeric_limits<double>::infinity();
      for (int ia = 0; ia <= 20; ++ia) {
        for (int ib = 0; ib <= 10; ++ib) {
          const double ga = -1.0 + 0.1 * ia, gb = 0.1 * ib;
          const double v = nll({ga, gb});
          if (v < best) {
            best = v;
            a = ga;
            b = gb;
          }
        }
      }
      optim::NelderMeadOptions nm;
      nm.bounds = optim::Box{{-1.0, 0.0}, {1.0, 1.0}};
      nm.ftol = 1e-12;
      nm.xtol = 1e-9;
      const auto res = optim::nelder_mead(nll, {a, b}, {0.05, 0.05}, nm);
      if (res.value <= best) {
        a = res.x[0];
        b = res.x[1];
      }
    }
    fit.alpha.push_back(a);
    fit.beta.push_back(b);
    const bool at_edge = a >= 1.0 - 1e-6 || a <= -1.0 + 1e-6;
    fit.boundary.push_back(at_edge);
    if (at_edge) {
      fit.warnings.push_back("condex: lag " + std::to_string(j + 1) + " alpha at boundary " +
                             std::to_string(a));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      fit.residuals(static_cast<Eigen::Index>(i), j) = (yj[i] - a * x[i]) / std::pow(x[i], b);
    }
  }
  rebuild_residual_kde(fit);
  if (!fit.residual_kde) {
    fit.warnings.push_back("condex: residual kernel singular; residual rows are resampled instead");
  }
  return fit;
}

void rebuild_residual_kde(CondExFit& fit) {
  fit.residual_kde.reset();
  if (fit.residuals.rows() < 2) return;
  try {
    KdeOptions opt;
    opt.scale = fit.bandwidth_scale;
    fit.residual_kde = KdeModel::fit(fit.residuals, opt);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularBandwidth) throw;
  }
}

std::optional<int> effective_order(std::span<const double> recent, double threshold, int order) {
  const int avail = std::min<int>(order, static_cast<int>(recent.size()));
  int l = 0;
  for (int i = 1; i <= avail; ++i) {
    if (!(recent[recent.size() - static_cast<std::size_t>(i)] > threshold)) break;
    l = i;
  }
  if (l == 0) return std::nullopt;
  return l;
}

TailChain::TailChain(CondExFit fit) : fit_(std::move(fit)) {
  if (fit_.residual_kde) {
    for (int l = 1; l <= fit_.order; ++l) {
      std::vector<int> given;
      for (int i = 0; i < l - 1; ++i) given.push_back(i);
      conditionals_.emplace_back(*fit_.residual_kde, given, std::vector<int>{l - 1});
    }
  }
}

Eigen::VectorXd TailChain::implied_residuals(const TailChainState& state) const {
  const int l = state.effective_order;
  const auto& r = state.recent;
  const double base = r[r.size() - static_cast<std::size_t>(l)];
  Eigen::VectorXd e(l - 1);
  for (int i = 1; i < l; ++i) {
    const double v = r[r.size() - static_cast<std::size_t>(l) + static_cast<std::size_t>(i)];
    e(i - 1) = (v - fit_.alpha[i - 1] * base) / std::pow(base, fit_.beta[i - 1]);
  }
  return e;
}

double TailChain::draw_unconditional(int lag, Rng& rng) const {
  if (!conditionals_.empty()) return conditionals_[lag - 1].sample_marginal(rng)(0);
  std::uniform_int_distribution<Eigen::Index> pick(0, fit_.residuals.rows() - 1);
  return fit_.residuals(pick(rng), lag - 1);
}

double TailChain::step(const TailChainState& state, Rng& rng, bool* fell_back) const {
  const int l = state.effective_order;
  if (l < 1 || l > fit_.order || static_cast<int>(state.recent.size()) < l) {
    throw Error(ErrorKind::Argument, "tail chain: effective order out of range");
  }
  const double base = state.recent[state.recent.size() - static_cast<std::size_t>(l)];
  if (!(base > fit_.threshold)) {
    throw Error(ErrorKind::Argument, "tail chain: conditioning value is not an exceedance");
  }
  if (fell_back) *fell_back = false;
  double e = 0.0;
  if (l == 1 || conditionals_.empty()) {
    e = draw_unconditional(l, rng);
  } else {
    try {
      e = conditionals_[l - 1].sample(implied_residuals(state), rng)(0);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::UnsupportedConditioning) throw;
      if (fell_back) *fell_back = true;
      e = draw_unconditional(l, rng);
    }
  }
  return fit_.alpha[l - 1] * base + std::pow(base, fit_.beta[l - 1]) * e;
}

}  // namespace etcsim
