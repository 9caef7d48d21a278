#include "etcsim/gam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "etcsim/catalog.hpp"
#include "etcsim/errors.hpp"

namespace etcsim {

namespace {

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // log(1 + e^eta) computed stably.
    const double e = eta(i);
    const double softplus = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    dev += 2.0 * (softplus - y(i) * e);
  }
  return dev;
}

struct Working {
  Eigen::MatrixXd xtwx;
  Eigen::VectorXd xtwz;
  double zwz = 0.0;
};

struct Penalty {
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<int> offset;

  Eigen::MatrixXd total(const std::vector<double>& lambda, int p) const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto q = blocks[k].rows();
      s.block(offset[k], offset[k], q, q) += lambda[k] * blocks[k];
    }
    return s;
  }
};

struct Solve {
  Eigen::VectorXd beta;
  double gcv = std::numeric_limits<double>::infinity();
  double edf = 0.0;
};

Solve solve_working(const Working& w, const Penalty& pen, const std::vector<double>& lambda,
                    double n) {
  const auto p = static_cast<int>(w.xtwx.rows());
  const Eigen::MatrixXd f = w.xtwx + pen.total(lambda, p);
  const Eigen::LLT<Eigen::MatrixXd> llt(f);
  Solve s;
  if (llt.info() != Eigen::Success) return s;
  s.beta = llt.solve(w.xtwz);
  s.edf = llt.solve(w.xtwx).trace();
  const double rss = std::max(0.0, w.zwz - 2.0 * s.beta.dot(w.xtwz) + s.beta.dot(w.xtwx * s.beta));
  const double denom = n - s.edf;
  if (denom > 0.0) s.gcv = n * rss / (denom * denom);
  return s;
}

}  // namespace

std::string to_string(GamCovariate c) {
  switch (c) {
    case GamCovariate::Vorticity: return "vorticity";
    case GamCovariate::VorticityDrop: return "vorticity_drop";
    case GamCovariate::Age: return "age";
    case GamCovariate::Lon: return "lon";
    case GamCovariate::Lat: return "lat";
  }
  return "unknown";
}

GamCovariate gam_covariate_from_string(const std::string& name) {
  for (auto c : {GamCovariate::Vorticity, GamCovariate::VorticityDrop, GamCovariate::Age,
                 GamCovariate::Lon, GamCovariate::Lat}) {
    if (to_string(c) == name) return c;
  }
  throw Error(ErrorKind::Validation, "unknown hazard covariate '" + name + "'");
}

std::vector<GamCovariate> default_gam_covariates() {
  return {GamCovariate::Vorticity, GamCovariate::VorticityDrop, GamCovariate::Age,
          GamCovariate::Lon, GamCovariate::Lat};
}

double HazardInputs::get(GamCovariate c) const noexcept {
  switch (c) {
    case GamCovariate::Vorticity: return vorticity;
    case GamCovariate::VorticityDrop: return vorticity_drop;
    case GamCovariate::Age: return age;
    case GamCovariate::Lon: return lon;
    case GamCovariate::Lat: return lat;
  }
  return 0.0;
}

HazardInputs hazard_inputs(const StormTrack& track, std::size_t t) {
  const auto& pts = track.points();
  HazardInputs in;
  in.vorticity = pts.at(t).vorticity;
  in.vorticity_drop = t > 0 ? pts[t - 1].vorticity - pts[t].vorticity : 0.0;
  in.age = static_cast<double>(t + 1);
  in.lon = pts[t].lon;
  in.lat = pts[t].lat;
  return in;
}

GamData build_gam_data(std::span<const StormTrack> storms,
                       const std::vector<GamCovariate>& covariates, std::span<const char> censored,
                       int min_age) {
  if (!censored.empty() && censored.size() != storms.size()) {
    throw Error(ErrorKind::Shape, "censoring flags do not match the storm count");
  }
  GamData data;
  data.covariates = covariates;
  std::size_t rows = 0;
  for (const auto& s : storms) {
    if (s.size() > static_cast<std::size_t>(min_age)) rows += s.size() - static_cast<std::size_t>(min_age) + 1;
  }
  data.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(covariates.size()));
  data.y.resize(static_cast<Eigen::Index>(rows));
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < storms.size(); ++i) {
    const auto& s = storms[i];
    if (s.size() <= static_cast<std::size_t>(min_age)) {
      ++data.excluded_storms;
      continue;
    }
    const bool cens = !censored.empty() && censored[i] != 0;
    for (std::size_t t = static_cast<std::size_t>(min_age) - 1; t < s.size(); ++t) {
      const auto in = hazard_inputs(s, t);
      for (std::size_t c = 0; c < covariates.size(); ++c) {
        data.x(r, static_cast<Eigen::Index>(c)) = in.get(covariates[c]);
      }
      data.y(r) = (!cens && t + 1 == s.size()) ? 1.0 : 0.0;
      ++r;
    }
  }
  if (data.excluded_storms > 0) {
    data.warnings.push_back("gam: " + std::to_string(data.excluded_storms) + " storm(s) with at most " +
                            std::to_string(min_age) + " points excluded");
  }
  return data;
}

GamData build_gam_data(const Catalog& catalog, const std::vector<GamCovariate>& covariates,
                       int min_age) {
  return build_gam_data(std::span<const StormTrack>(catalog.storms()), covariates, {}, min_age);
}

double GamFit::smooth(std::size_t k, double x) const {
  return bases.at(k).evaluate(x).dot(smooth_coef.at(k));
}

double GamFit::linear_predictor(const HazardInputs& in) const {
  double eta = intercept;
  for (std::size_t k = 0; k < covariates.size(); ++k) eta += smooth(k, in.get(covariates[k]));
  return eta;
}

double GamFit::hazard(const HazardInputs& in) const {
  if (in.age < static_cast<double>(min_age)) return 0.0;
  return logistic(linear_predictor(in));
}

GamFit fit_gam(const GamData& data, const GamOptions& options) {
  const Eigen::Index n = data.y.size();
  const auto m = data.covariates.size();
  if (n == 0) throw Error(ErrorKind::Validation, "gam: no eligible rows");
  const double ones = data.y.sum();
  if (ones <= 0.0 || ones >= static_cast<double>(n)) {
    throw Error(ErrorKind::Validation, "gam: both outcome classes must be present");
  }
  if (!options.fixed_lambda.empty() && options.fixed_lambda.size() != m) {
    throw Error(ErrorKind::Argument, "gam: fixed smoothing parameters do not match the smooths");
  }

  GamFit fit;
  fit.covariates = data.covariates;
  fit.n = static_cast<std::size_t>(n);

  // Constrained design blocks: B_k Z_k with Z_k spanning {c : 1'B_k c = 0}.
  std::vector<Eigen::MatrixXd> z(m);
  Penalty pen;
  int p = 1;
  std::vector<Eigen::MatrixXd> blocks(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Eigen::VectorXd col = data.x.col(static_cast<Eigen::Index>(k));
    fit.bases.emplace_back(std::span<const double>(col.data(), static_cast<std::size_t>(n)),
                           options.interior_knots, 3);
    const auto& basis = fit.bases.back();
    const int q = basis.size();
    Eigen::MatrixXd b(n, q);
    for (Eigen::Index i = 0; i < n; ++i) b.row(i) = basis.evaluate(col(i)).transpose();
    const Eigen::VectorXd c = b.colwise().sum().transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
    const Eigen::MatrixXd qfull = qr.householderQ() * Eigen::MatrixXd::Identity(q, q);
    z[k] = qfull.rightCols(q - 1);
    blocks[k] = b * z[k];
    Eigen::MatrixXd s = z[k].transpose() * basis.penalty() * z[k];
    const double xnorm = (blocks[k].transpose() * blocks[k]).norm();
    const double snorm = s.norm();
    if (snorm > 0.0) s *= xnorm / snorm / static_cast<double>(n);
    pen.blocks.push_back(std::move(s));
    pen.offset.push_back(p);
    p += q - 1;
  }
  if (n <= p) throw Error(ErrorKind::Validation, "gam: fewer rows than basis coefficients");
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  for (std::size_t k = 0; k < m; ++k) x.middleCols(pen.offset[k], blocks[k].cols()) = blocks[k];
  blocks.clear();

  const int g = std::max(2, options.grid_points);
  for (int i = 0; i < g; ++i) {
    fit.lambda_grid.push_back(std::exp(std::log(options.lambda_lo) +
                                       (std::log(options.lambda_hi) - std::log(options.lambda_lo)) * i /
                                           (g - 1)));
  }
  std::vector<int> sel(m, g / 2);
  std::vector<double> lambda(m);
  const bool select = options.fixed_lambda.empty();
  for (std::size_t k = 0; k < m; ++k) lambda[k] = select ? fit.lambda_grid[sel[k]] : options.fixed_lambda[k];

  const double dn = static_cast<double>(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta(0) = std::log(ones / (dn - ones));
  Eigen::VectorXd eta = x * beta;
  double dev = binomial_deviance(data.y, eta);

  auto working = [&](const Eigen::VectorXd& eta_cur) {
    Working w;
    Eigen::VectorXd wt(n), zz(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = logistic(eta_cur(i));
      const double var = std::max(mu * (1.0 - mu), 1e-12);
      wt(i) = var;
      zz(i) = eta_cur(i) + (data.y(i) - mu) / var;
    }
    const Eigen::MatrixXd xw = x.transpose() * wt.asDiagonal();
    w.xtwx = xw * x;
    w.xtwz = xw * zz;
    w.zwz = (zz.array().square() * wt.array()).sum();
    return w;
  };

  bool settled = !select;  // smoothing selection has stopped moving
  Solve last;
  for (int it = 0; it < options.max_iterations; ++it) {
    fit.iterations = it + 1;
    const Working w = working(eta);
    bool moved = false;
    if (select && !settled) {
      for (int sweep = 0; sweep < options.sweeps; ++sweep) {
        for (std::size_t k = 0; k < m; ++k) {
          int best = sel[k];
          double best_v = std::numeric_limits<double>::infinity();
          for (int j = 0; j < g; ++j) {
            lambda[k] = fit.lambda_grid[j];
            const double v = solve_working(w, pen, lambda, dn).gcv;
            if (v < best_v) {
              best_v = v;
              best = j;
            }
          }
          if (best != sel[k]) moved = true;
          sel[k] = best;
          lambda[k] = fit.lambda_grid[best];
        }
      }
    }
    const Solve s = solve_working(w, pen, lambda, dn);
    if (!s.beta.allFinite()) throw Error(ErrorKind::Fit, "gam: penalised IRLS diverged");

    // Step halving on the penalised deviance.
    const Eigen::MatrixXd stot = pen.total(lambda, p);
    const double old_pdev = dev + beta.dot(stot * beta);
    Eigen::VectorXd nb = s.beta;
    Eigen::VectorXd neta = x * nb;
    double ndev = binomial_deviance(data.y, neta);
    for (int h = 0; h < 30 && ndev + nb.dot(stot * nb) > old_pdev + 1e-12 * (1.0 + old_pdev) && !moved; ++h) {
      nb = 0.5 * (nb + beta);
      neta = x * nb;
      ndev = binomial_deviance(data.y, neta);
    }
    const double change = std::abs(ndev - dev);
    beta = nb;
    eta = neta;
    dev = ndev;
    if (!std::isfinite(dev)) throw Error(ErrorKind::Fit, "gam: deviance is not finite");

    if (select && !settled && !moved && change < 1e-8 * (std::abs(dev) + 0.1)) {
      settled = true;
      fit.gcv_profile.assign(m, std::vector<double>(static_cast<std::size_t>(g)));
      for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> lam = lambda;
        for (int j = 0; j < g; ++j) {
          lam[k] = fit.lambda_grid[j];
          fit.gcv_profile[k][j] = solve_working(w, pen, lam, dn).gcv;
        }
      }
      last = s;
      continue;
    }
    if (settled && change < 1e-10 * (std::abs(dev) + 0.1)) {
      if (!select) last = s;
      break;
    }
  }
  const Working w = working(eta);
  const Solve fin = solve_working(w, pen, lambda, dn);
  fit.gcv = select && !fit.gcv_profile.empty() ? last.gcv : fin.gcv;
  fit.edf = fin.edf;
  fit.deviance = dev;
  fit.aic = dev + 2.0 * fin.edf;
  fit.smoothing = lambda;

  if (beta.cwiseAbs().maxCoeff() > options.separation_limit) {
    throw Error(ErrorKind::Separation, "gam: coefficient magnitude exceeds " +
                                           std::to_string(options.separation_limit) +
                                           " (quasi-separation)");
  }
  fit.intercept = beta(0);
  for (std::size_t k = 0; k < m; ++k) {
    fit.smooth_coef.push_back(z[k] * beta.segment(pen.offset[k], z[k].cols()));
  }
  return fit;
}

}  // namespace etcsim
