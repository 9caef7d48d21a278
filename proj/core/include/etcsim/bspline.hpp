/**
 * @file bspline.hpp
 * @brief Cubic B-spline bases with quantile knots, a second-difference
 * penalty and linear extrapolation beyond the boundary knots.
 */
#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace etcsim {

class BSplineBasis {
 public:
  BSplineBasis() = default;
  /// Boundary knots at the data range, up to `interior` knots at equally
  /// spaced quantiles (duplicates dropped).
  BSplineBasis(std::span<const double> data, int interior = 10, int degree = 3);
  /// From a full knot vector (boundary knots repeated degree+1 times).
  BSplineBasis(std::vector<double> knots, int degree);

  int degree() const noexcept { return degree_; }
  int size() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  double lower() const noexcept { return knots_.front(); }
  double upper() const noexcept { return knots_.back(); }

  /// Basis values at x; linear continuation outside [lower, upper].
  Eigen::VectorXd evaluate(double x) const;
  /// First derivatives of the basis at x in [lower, upper].
  Eigen::VectorXd derivative(double x) const;

  /// Greville abscissae (knot averages); strictly increasing.
  std::vector<double> greville() const;
  /// Penalty D'D from second divided differences of the coefficients over
  /// the Greville abscissae. Its null space is exactly the linear functions.
  Eigen::MatrixXd penalty() const;

 private:
  Eigen::VectorXd basis_of_degree(double x, int degree) const;

  std::vector<double> knots_;
  int degree_ = 3;
};

}  // namespace etcsim
