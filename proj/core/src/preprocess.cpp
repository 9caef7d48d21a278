#include "etcsim/preprocess.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "etcsim/catalog.hpp"
#include "etcsim/errors.hpp"
#include "etcsim/optim.hpp"

namespace etcsim {

namespace {

constexpr double kLambdaZero = 1e-8;

struct Problem {
  Eigen::MatrixXd x;  // design
  std::span<const double> omega;
  double sum_log_omega = 0.0;
};

struct InnerFit {
  Eigen::VectorXd b;
  Eigen::VectorXd g;
  double ll = -std::numeric_limits<double>::infinity();
};

double gaussian_ll(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& g) {
  const Eigen::VectorXd log_sigma = x * g;
  const Eigen::ArrayXd r = (y - x * b).array() / log_sigma.array().exp();
  const auto n = static_cast<double>(y.size());
  return -log_sigma.sum() - 0.5 * r.square().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

// Alternating weighted least squares for mu and Fisher scoring for log sigma.
InnerFit fit_given_lambda(const Problem& p, double lambda) {
  const Eigen::Index n = p.x.rows();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = box_cox(p.omega[static_cast<std::size_t>(i)], lambda);
  const double jac = (lambda - 1.0) * p.sum_log_omega;

  InnerFit f;
  const Eigen::LDLT<Eigen::MatrixXd> xtx((p.x.transpose() * p.x).eval());
  f.b = xtx.solve(p.x.transpose() * y);
  const Eigen::VectorXd r0 = y - p.x * f.b;
  f.g = Eigen::VectorXd::Zero(p.x.cols());
  f.g(0) = std::log(std::max(std::sqrt(r0.squaredNorm() / static_cast<double>(n)), 1e-12));
  double ll = gaussian_ll(y, p.x, f.b, f.g);

  for (int it = 0; it < 200; ++it) {
    const Eigen::ArrayXd w = (-2.0 * (p.x * f.g)).array().exp();
    const Eigen::MatrixXd xw = p.x.transpose() * w.matrix().asDiagonal();
    f.b = (xw * p.x).ldlt().solve(xw * y);

    const Eigen::ArrayXd r2 = (y - p.x * f.b).array().square();
    const Eigen::VectorXd score = p.x.transpose() * (r2 * w - 1.0).matrix();
    const Eigen::VectorXd delta = xtx.solve(score) / 2.0;
    double prev = gaussian_ll(y, p.x, f.b, f.g);
    double step = 1.0;
    Eigen::VectorXd g_new = f.g + delta;
    double ll_new = gaussian_ll(y, p.x, f.b, g_new);
    while (!(ll_new >= prev) && step > 1e-6) {
      step *= 0.5;
      g_new = f.g + step * delta;
      ll_new = gaussian_ll(y, p.x, f.b, g_new);
    }
    if (ll_new >= prev) f.g = g_new;
    const double cur = std::max(ll_new, prev);
    if (std::abs(cur - ll) < 1e-10 * (1.0 + std::abs(cur))) {
      ll = cur;
      break;
    }
    ll = cur;
  }
  f.ll = ll + jac;
  return f;
}

PreprocFit fit_structure(std::span<const double> omega, std::span<const PointCovariates> nu,
                         const PreprocOptions& options, PreprocFit base, bool quadratic) {
  base.quadratic = quadratic;
  Problem p;
  p.omega = omega;
  const int cols = quadratic ? 8 : 6;
  p.x.resize(static_cast<Eigen::Index>(omega.size()), cols);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    p.x.row(static_cast<Eigen::Index>(i)) = base.design_row(nu[i]).transpose();
    p.sum_log_omega += std::log(omega[i]);
  }
  auto negll = [&](double lam) {
    const double v = fit_given_lambda(p, lam).ll;
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  double best_lam = options.lambda_lo;
  double best = std::numeric_limits<double>::infinity();
  const int grid = 12;
  for (int i = 0; i <= grid; ++i) {
    const double lam = options.lambda_lo + (options.lambda_hi - options.lambda_lo) * i / grid;
    const double v = negll(lam);
    if (v < best) {
      best = v;
      best_lam = lam;
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorKind::Fit, "preprocess: likelihood not finite on the lambda grid");
  const double half = (options.lambda_hi - options.lambda_lo) / grid;
  const auto res = optim::brent_minimize(negll, std::max(options.lambda_lo, best_lam - half),
                                         std::min(options.lambda_hi, best_lam + half));
  const double lam = res.value <= best ? res.x[0] : best_lam;
  const InnerFit f = fit_given_lambda(p, lam);
  if (!std::isfinite(f.ll) || !f.b.allFinite() || !f.g.allFinite()) {
    throw Error(ErrorKind::Fit, "preprocess: optimiser failed");
  }
  base.lambda = lam;
  base.mu_coef = f.b;
  base.sigma_coef = f.g;
  base.log_likelihood = f.ll;
  base.n = omega.size();
  return base;
}

}  // namespace

PointCovariates point_covariates(const StormTrack& track, std::size_t t) {
  const auto& pt = track.points().at(t);
  const std::size_t step = t == 0 ? 0 : t - 1;
  return {pt.lon, pt.lat, track.bearing().at(step), track.speed().at(step)};
}

Eigen::VectorXd PreprocFit::design_row(const PointCovariates& nu) const {
  const double lon = (nu.lon - center[0]) / scale[0];
  const double lat = (nu.lat - center[1]) / scale[1];
  const double spd = (nu.speed - center[2]) / scale[2];
  Eigen::VectorXd r(quadratic ? 8 : 6);
  r << 1.0, lon, lat, std::sin(nu.bearing), std::cos(nu.bearing), spd;
  if (quadratic) {
    r(6) = lon * lon;
    r(7) = lat * lat;
  }
  return r;
}

double PreprocFit::mu(const PointCovariates& nu) const { return design_row(nu).dot(mu_coef); }

double PreprocFit::sigma(const PointCovariates& nu) const {
  return std::exp(design_row(nu).dot(sigma_coef));
}

double box_cox(double omega, double lambda) {
  if (!(omega > 0.0)) throw Error(ErrorKind::Domain, "Box-Cox needs positive vorticity");
  if (std::abs(lambda) < kLambdaZero) return std::log(omega);
  return std::expm1(lambda * std::log(omega)) / lambda;
}

double inverse_box_cox(double y, double lambda) {
  if (std::abs(lambda) < kLambdaZero) return std::exp(y);
  const double t = 1.0 + lambda * y;
  if (!(t > 0.0)) throw Error(ErrorKind::InvalidInverse, "Box-Cox inverse outside its domain");
  return std::exp(std::log1p(lambda * y) / lambda);
}

double preprocess_log_likelihood(std::span<const double> omega,
                                 std::span<const PointCovariates> nu, const PreprocFit& fit) {
  double ll = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double s = fit.sigma(nu[i]);
    const double z = (box_cox(omega[i], fit.lambda) - fit.mu(nu[i])) / s;
    ll += -std::log(s) - 0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) +
          (fit.lambda - 1.0) * std::log(omega[i]);
  }
  return ll;
}

PreprocFit fit_preprocess(std::span<const double> omega, std::span<const PointCovariates> nu,
                          const PreprocOptions& options) {
  if (omega.size() != nu.size()) throw Error(ErrorKind::Shape, "preprocess: input lengths differ");
  if (omega.size() < options.min_points) {
    throw Error(ErrorKind::Validation, "preprocess: needs at least " +
                                           std::to_string(options.min_points) +
                                           " in-window points, got " + std::to_string(omega.size()));
  }
  for (double w : omega) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorKind::Domain, "preprocess: non-positive vorticity");
  }
  PreprocFit base;
  base.window = options.window;
  const auto n = static_cast<double>(omega.size());
  const auto moments = [&](auto get, std::size_t k) {
    double m = 0.0, v = 0.0;
    for (const auto& c : nu) m += get(c);
    m /= n;
    for (const auto& c : nu) v += (get(c) - m) * (get(c) - m);
    const double sd = std::sqrt(v / n);
    base.center[k] = m;
    base.scale[k] = sd > 1e-12 ? sd : 1.0;
  };
  moments([](const PointCovariates& c) { return c.lon; }, 0);
  moments([](const PointCovariates& c) { return c.lat; }, 1);
  moments([](const PointCovariates& c) { return c.speed; }, 2);

  if (options.quadratic == QuadraticTerms::Never) return fit_structure(omega, nu, options, base, false);
  if (options.quadratic == QuadraticTerms::Always) return fit_structure(omega, nu, options, base, true);
  PreprocFit lin = fit_structure(omega, nu, options, base, false);
  PreprocFit quad = fit_structure(omega, nu, options, base, true);
  const double stat = std::max(0.0, 2.0 * (quad.log_likelihood - lin.log_likelihood));
  const double pval = boost::math::cdf(boost::math::complement(boost::math::chi_squared(4.0), stat));
  PreprocFit& chosen = pval < options.lrt_level ? quad : lin;
  chosen.lrt_statistic = stat;
  chosen.lrt_p_value = pval;
  return chosen;
}

PreprocFit fit_preprocess(const Catalog& catalog, const PreprocOptions& options) {
  std::vector<double> omega;
  std::vector<PointCovariates> nu;
  for (const auto& s : catalog.storms()) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      const auto& p = s.points()[t];
      if (!options.window.contains(p.lon, p.lat)) continue;
      omega.push_back(p.vorticity);
      nu.push_back(point_covariates(s, t));
    }
  }
  return fit_preprocess(omega, nu, options);
}

double to_residual(double omega, const PointCovariates& nu, const PreprocFit& fit) {
  return (box_cox(omega, fit.lambda) - fit.mu(nu)) / fit.sigma(nu);
}

double from_residual(double w, const PointCovariates& nu, const PreprocFit& fit) {
  return inverse_box_cox(fit.mu(nu) + fit.sigma(nu) * w, fit.lambda);
}

}  // namespace etcsim
