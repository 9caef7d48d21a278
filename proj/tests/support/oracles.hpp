// Independent reference computations for the tests. Nothing here calls into
// the library code paths being checked.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace etcsim::oracle {

inline constexpr double kRadius = 6'371'000.0;
inline constexpr double kDeg = std::numbers::pi / 180.0;

inline double haversine(double lon1, double lat1, double lon2, double lat2) {
  const double dphi = (lat2 - lat1) * kDeg;
  const double dlam = (lon2 - lon1) * kDeg;
  const double s = std::sin(dphi / 2), t = std::sin(dlam / 2);
  const double a = s * s + std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * t * t;
  return 2.0 * kRadius * std::asin(std::min(1.0, std::sqrt(a)));
}

inline std::array<double, 3> ecef(double lon, double lat) {
  const double l = lon * kDeg, p = lat * kDeg;
  return {std::cos(p) * std::cos(l), std::cos(p) * std::sin(l), std::sin(p)};
}

/// Bearing from the local north/east frame at p: project q onto the tangent
/// basis vectors and take atan2(east, north).
inline double ecef_bearing(double lon1, double lat1, double lon2, double lat2) {
  const double l = lon1 * kDeg, p = lat1 * kDeg;
  const std::array<double, 3> east{-std::sin(l), std::cos(l), 0.0};
  const std::array<double, 3> north{-std::sin(p) * std::cos(l), -std::sin(p) * std::sin(l), std::cos(p)};
  const auto q = ecef(lon2, lat2);
  const double e = east[0] * q[0] + east[1] * q[1] + east[2] * q[2];
  const double n = north[0] * q[0] + north[1] * q[1] + north[2] * q[2];
  return std::atan2(e, n);
}

/// Angle between the two position vectors (cross/dot form).
inline double vector_distance(double lon1, double lat1, double lon2, double lat2) {
  const auto a = ecef(lon1, lat1), b = ecef(lon2, lat2);
  const double cx = a[1] * b[2] - a[2] * b[1];
  const double cy = a[2] * b[0] - a[0] * b[2];
  const double cz = a[0] * b[1] - a[1] * b[0];
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return kRadius * std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

/// Partial autocorrelation at `lag` as the last coefficient of an OLS
/// autoregression with intercept.
inline double ols_pacf(const std::vector<double>& x, int lag) {
  const int n = static_cast<int>(x.size()) - lag;
  Eigen::MatrixXd X(n, lag + 1);
  Eigen::VectorXd y(n);
  for (int t = 0; t < n; ++t) {
    y(t) = x[t + lag];
    X(t, 0) = 1.0;
    for (int j = 1; j <= lag; ++j) X(t, j) = x[t + lag - j];
  }
  const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
  return b(lag);
}

/// Standard normal CDF.
inline double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Trapezoid rule on [a, b] with n panels.
template <class F>
double trapezoid(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

/// Direct Gaussian-mixture density sum_i N(z; x_i, H) / n over the rows of
/// `samples`, written without any of the library's cached factorisations.
inline double mixture_density(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& h, const Eigen::VectorXd& z) {
  const Eigen::Index d = samples.cols();
  const Eigen::MatrixXd inv = h.inverse();
  const double norm = std::pow(2 * std::numbers::pi, -0.5 * static_cast<double>(d)) / std::sqrt(h.determinant());
  double total = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const Eigen::VectorXd r = z - samples.row(i).transpose();
    total += norm * std::exp(-0.5 * r.dot(inv * r));
  }
  return total / static_cast<double>(samples.rows());
}

/// Kolmogorov distance between sorted draws and a CDF tabulated on a grid
/// (linear interpolation between nodes).
inline double ks_distance(std::vector<double> draws, const std::vector<double>& grid, const std::vector<double>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double worst = 0.0;
  std::size_t g = 0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double x = draws[i];
    while (g + 1 < grid.size() && grid[g + 1] < x) ++g;
    double f;
    if (x <= grid.front()) {
      f = 0.0;
    } else if (x >= grid.back()) {
      f = 1.0;
    } else {
      const double t = (x - grid[g]) / (grid[g + 1] - grid[g]);
      f = cdf[g] + t * (cdf[g + 1] - cdf[g]);
    }
    worst = std::max({worst, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return worst;
}

/// Conditional CDF of dimension `target` given the remaining coordinates of
/// `point`, by trapezoid quadrature of the joint density on `grid`.
inline std::vector<double> conditional_cdf(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& h, int target,
                                           Eigen::VectorXd point, const std::vector<double>& grid) {
  std::vector<double> f(grid.size()), cdf(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    point[target] = grid[i];
    f[i] = mixture_density(samples, h, point);
  }
  for (std::size_t i = 1; i < grid.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
  for (auto& c : cdf) c /= cdf.back();
  return cdf;
}

}  // namespace etcsim::oracle

#include "etcsim/catalog.hpp"

namespace etcsim::oracle {

struct Recount {
  std::size_t points_in = 0, points_above = 0, storms_in = 0, storms_above = 0;
};

/// Naive double loop over storms and points for a half-open lon/lat box.
inline Recount recount(const Catalog& c, double lon_lo, double lon_hi, double lat_lo, double lat_hi, double omega) {
  Recount r;
  for (std::size_t s = 0; s < c.storms().size(); ++s) {
    bool in = false, above = false;
    for (std::size_t t = 0; t < c.storms()[s].size(); ++t) {
      const auto& p = c.storms()[s].points()[t];
      if (!(p.lon >= lon_lo && p.lon < lon_hi && p.lat >= lat_lo && p.lat < lat_hi)) continue;
      in = true;
      r.points_in += 1;
      if (p.vorticity > omega) {
        r.points_above += 1;
        above = true;
      }
    }
    r.storms_in += in;
    r.storms_above += above;
  }
  return r;
}

}  // namespace etcsim::oracle
