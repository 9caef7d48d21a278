#include "etcsim/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "etcsim/errors.hpp"

namespace etcsim {

BSplineBasis::BSplineBasis(std::span<const double> data, int interior, int degree) : degree_(degree) {
  if (data.empty()) throw Error(ErrorKind::Argument, "spline basis needs data");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (!(hi > lo)) throw Error(ErrorKind::Validation, "spline covariate is constant");
  std::vector<double> inner;
  for (int j = 1; j <= interior; ++j) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * j / (interior + 1.0);
    const auto i = static_cast<std::size_t>(std::floor(h));
    const double q = sorted[i] + (h - static_cast<double>(i)) *
                                     (sorted[std::min(i + 1, sorted.size() - 1)] - sorted[i]);
    const double tol = 1e-9 * (hi - lo);
    if (q <= lo + tol || q >= hi - tol) continue;
    if (!inner.empty() && q <= inner.back() + tol) continue;
    inner.push_back(q);
  }
  knots_.assign(static_cast<std::size_t>(degree + 1), lo);
  knots_.insert(knots_.end(), inner.begin(), inner.end());
  knots_.insert(knots_.end(), static_cast<std::size_t>(degree + 1), hi);
}

BSplineBasis::BSplineBasis(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
  if (degree < 1 || knots_.size() < static_cast<std::size_t>(2 * degree + 2)) {
    throw Error(ErrorKind::Validation, "spline knot vector too short");
  }
  if (!std::is_sorted(knots_.begin(), knots_.end()) || !(knots_.back() > knots_.front())) {
    throw Error(ErrorKind::Validation, "spline knots must be non-decreasing with positive range");
  }
}

Eigen::VectorXd BSplineBasis::basis_of_degree(double x, int degree) const {
  const auto& t = knots_;
  const int m = static_cast<int>(t.size());
  // Degree-0 indicator on the last non-empty interval containing x.
  Eigen::VectorXd n = Eigen::VectorXd::Zero(m - 1);
  int span = -1;
  if (x >= t.back()) {
    for (int i = m - 2; i >= 0; --i) {
      if (t[i] < t[i + 1]) {
        span = i;
        break;
      }
    }
  } else {
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    span = static_cast<int>(it - t.begin()) - 1;
  }
  if (span < 0 || span >= m - 1) return Eigen::VectorXd::Zero(m - degree - 1);
  n(span) = 1.0;
  for (int p = 1; p <= degree; ++p) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(m - p - 1);
    for (int i = 0; i < m - p - 1; ++i) {
      double v = 0.0;
      const double d1 = t[i + p] - t[i];
      const double d2 = t[i + p + 1] - t[i + 1];
      if (d1 > 0.0) v += (x - t[i]) / d1 * n(i);
      if (d2 > 0.0) v += (t[i + p + 1] - x) / d2 * n(i + 1);
      next(i) = v;
    }
    n = std::move(next);
  }
  return n;
}

Eigen::VectorXd BSplineBasis::derivative(double x) const {
  const int q = size();
  const Eigen::VectorXd lower = basis_of_degree(x, degree_ - 1);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(q);
  for (int i = 0; i < q; ++i) {
    const double d1 = knots_[i + degree_] - knots_[i];
    const double d2 = knots_[i + degree_ + 1] - knots_[i + 1];
    if (d1 > 0.0) d(i) += degree_ * lower(i) / d1;
    if (d2 > 0.0) d(i) -= degree_ * lower(i + 1) / d2;
  }
  return d;
}

Eigen::VectorXd BSplineBasis::evaluate(double x) const {
  if (x < lower()) return basis_of_degree(lower(), degree_) + (x - lower()) * derivative(lower());
  if (x > upper()) return basis_of_degree(upper(), degree_) + (x - upper()) * derivative(upper());
  return basis_of_degree(x, degree_);
}

std::vector<double> BSplineBasis::greville() const {
  std::vector<double> g(static_cast<std::size_t>(size()));
  for (int j = 0; j < size(); ++j) {
    double s = 0.0;
    for (int i = 1; i <= degree_; ++i) s += knots_[j + i];
    g[j] = s / degree_;
  }
  return g;
}

Eigen::MatrixXd BSplineBasis::penalty() const {
  const int q = size();
  const auto g = greville();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(std::max(0, q - 2), q);
  for (int j = 0; j + 2 < q; ++j) {
    const double h0 = g[j + 1] - g[j];
    const double h1 = g[j + 2] - g[j + 1];
    const double scale = 0.5 * (h0 + h1);
    d(j, j) = 1.0 / h0 * scale;
    d(j, j + 1) = -(1.0 / h0 + 1.0 / h1) * scale;
    d(j, j + 2) = 1.0 / h1 * scale;
  }
  return d.transpose() * d;
}

}  // namespace etcsim
