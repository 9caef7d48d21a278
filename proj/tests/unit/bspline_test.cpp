#include <doctest.h>

#include <cmath>

#include "etcsim/bspline.hpp"
#include "etcsim/rng.hpp"

using namespace etcsim;

TEST_SUITE("bspline") {
  TEST_CASE("partition of unity and derivatives") {
    Rng rng(1);
    std::vector<double> x(500);
    for (auto& v : x) v = std::exp(standard_normal(rng));
    const BSplineBasis b(x, 10, 3);
    CHECK(b.size() == 14);
    for (std::size_t i = 1; i < b.knots().size(); ++i) CHECK(b.knots()[i] >= b.knots()[i - 1]);
    for (double t = b.lower(); t <= b.upper(); t += (b.upper() - b.lower()) / 97.0) {
      const Eigen::VectorXd v = b.evaluate(t);
      CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(v.minCoeff() >= -1e-15);
      const double h = 1e-6;
      const Eigen::VectorXd fd = (b.evaluate(t + h) - b.evaluate(t - h)) / (2 * h);
      if (t - h > b.lower() && t + h < b.upper()) CHECK((fd - b.derivative(t)).cwiseAbs().maxCoeff() < 1e-4);
    }
  }

  TEST_CASE("linear extrapolation outside the knots") {
    const BSplineBasis b(std::vector<double>{0, 0, 0, 0, 1, 2, 3, 3, 3, 3}, 3);
    Eigen::VectorXd coef(b.size());
    for (int i = 0; i < b.size(); ++i) coef[i] = std::sin(1.0 + i);
    const double f0 = b.evaluate(3.0).dot(coef), d0 = b.derivative(3.0).dot(coef);
    for (double dx : {0.5, 2.0, 10.0}) CHECK(b.evaluate(3.0 + dx).dot(coef) == doctest::Approx(f0 + dx * d0).epsilon(1e-12));
    const double g0 = b.evaluate(0.0).dot(coef), e0 = b.derivative(0.0).dot(coef);
    CHECK(b.evaluate(-1.5).dot(coef) == doctest::Approx(g0 - 1.5 * e0).epsilon(1e-12));
  }

  TEST_CASE("penalty null space holds linear functions") {
    Rng rng(2);
    std::vector<double> x(300);
    for (auto& v : x) v = 10.0 * uniform01(rng);
    const BSplineBasis b(x, 10, 3);
    const Eigen::MatrixXd s = b.penalty();
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const auto g = b.greville();
    Eigen::VectorXd lin(b.size());
    for (int i = 0; i < b.size(); ++i) lin[i] = 2.0 - 0.7 * g[i];
    for (double t : {0.5, 3.3, 7.9}) CHECK(b.evaluate(t).dot(lin) == doctest::Approx(2.0 - 0.7 * t).epsilon(1e-12));
    CHECK((s * lin).cwiseAbs().maxCoeff() < 1e-8 * s.cwiseAbs().maxCoeff());
    CHECK((s * Eigen::VectorXd::Ones(b.size())).cwiseAbs().maxCoeff() < 1e-8 * s.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    CHECK(es.eigenvalues().minCoeff() > -1e-8 * es.eigenvalues().maxCoeff());
    int zero = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) zero += es.eigenvalues()[i] < 1e-9 * es.eigenvalues().maxCoeff();
    CHECK(zero == 2);
  }
}
