#include <doctest.h>

#include <cmath>
#include <numbers>

#include "etcsim/errors.hpp"
#include "etcsim/kde.hpp"
#include "oracles.hpp"

using namespace etcsim;
using std::numbers::pi;

namespace {

Eigen::MatrixXd correlated_samples(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd s(n, 2);
  for (int i = 0; i < n; ++i) {
    const double a = standard_normal(rng), b = standard_normal(rng);
    s(i, 0) = 1.0 + a;
    s(i, 1) = -2.0 + 0.7 * a + 0.5 * b;
  }
  return s;
}

}  // namespace

TEST_SUITE("kde") {
  TEST_CASE("rule-of-thumb bandwidth") {
    Eigen::MatrixXd s(2, 1);
    s << 0.0, 1.0;
    const KdeModel m = KdeModel::fit(s);
    CHECK(m.bandwidth()(0, 0) == doctest::Approx(std::pow(2.0, -0.4) * 0.5).epsilon(1e-14));
    KdeOptions zero;
    zero.scale = 0.0;
    CHECK_THROWS_AS(KdeModel::fit(s, zero), Error);
    Eigen::MatrixXd flat(3, 1);
    flat << 2.0, 2.0, 2.0;
    CHECK_THROWS_AS(KdeModel::fit(flat), Error);
  }

  TEST_CASE("circular unrolling") {
    Eigen::MatrixXd s(1, 1);
    s << -pi + 0.01;
    KdeOptions o;
    o.circular_dims = {0};
    const KdeModel m = KdeModel::with_bandwidth(s, Eigen::MatrixXd::Constant(1, 1, 0.1), o);
    REQUIRE(m.support().cols() == 3);
    std::vector<double> c{m.support()(0, 0), m.support()(0, 1), m.support()(0, 2)};
    std::sort(c.begin(), c.end());
    CHECK(c[0] == doctest::Approx(-3 * pi + 0.01));
    CHECK(c[1] == doctest::Approx(-pi + 0.01));
    CHECK(c[2] == doctest::Approx(pi + 0.01));

    Rng rng(5);
    Eigen::MatrixXd angles(50, 1);
    for (int i = 0; i < 50; ++i) angles(i, 0) = wrap_angle(3.0 + 0.4 * standard_normal(rng));
    const KdeModel circ = KdeModel::fit(angles, o);
    Eigen::VectorXd lo(1), hi(1);
    lo << -pi;
    hi << pi;
    CHECK(std::abs(circ.density(lo) - circ.density(hi)) < 1e-12);
    const double mass = oracle::trapezoid([&](double x) { return circ.density(Eigen::VectorXd::Constant(1, x)); }, -pi, pi, 4000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("density values") {
    Eigen::MatrixXd one(1, 2);
    one << 0.3, -0.2;
    Eigen::MatrixXd h(2, 2);
    h << 0.5, 0.1, 0.1, 0.3;
    const KdeModel m = KdeModel::with_bandwidth(one, h);
    CHECK(m.density(one.row(0).transpose()) ==
          doctest::Approx(1.0 / (2 * pi * std::sqrt(h.determinant()))).epsilon(1e-12));

    Rng rng(11);
    Eigen::MatrixXd s(40, 1);
    for (int i = 0; i < 40; ++i) s(i, 0) = standard_normal(rng) * 2.0 + 1.0;
    const KdeModel k = KdeModel::fit(s);
    const double mass = oracle::trapezoid([&](double x) { return k.density(Eigen::VectorXd::Constant(1, x)); }, -30, 30, 20000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(k.density(Eigen::VectorXd::Constant(1, 1e6)) == 0.0);
    CHECK_THROWS_AS(k.density(Eigen::VectorXd::Zero(2)), Error);

    const KdeModel two = KdeModel::fit(correlated_samples(60, 3));
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd z(2);
      z << 0.5 * i, -2.0 + 0.3 * i;
      CHECK(two.density(z) == doctest::Approx(oracle::mixture_density(two.samples(), two.bandwidth(), z)).epsilon(1e-12));
    }
  }

  TEST_CASE("joint sampling moments and determinism") {
    const Eigen::MatrixXd s = correlated_samples(80, 4);
    const KdeModel m = KdeModel::fit(s);
    Rng rng(99);
    const int n = 100'000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
    for (int i = 0; i < n; ++i) sum += m.sample(rng);
    const Eigen::VectorXd mean = sum / n;
    const Eigen::VectorXd train = s.colwise().mean().transpose();
    const Eigen::MatrixXd centred = s.rowwise() - train.transpose();
    for (int j = 0; j < 2; ++j) {
      const double var = centred.col(j).squaredNorm() / s.rows() + m.bandwidth()(j, j);
      CHECK(std::abs(mean[j] - train[j]) < 3.0 * std::sqrt(var / n));
    }
    Rng a(1), b(1);
    for (int i = 0; i < 10; ++i) CHECK(m.sample(a) == m.sample(b));

    KdeOptions tiny;
    tiny.scale = 1e-9;
    const KdeModel degenerate = KdeModel::fit(s, tiny);
    const Eigen::VectorXd d = degenerate.sample(rng);
    bool matched = false;
    for (int i = 0; i < s.rows(); ++i) matched |= (s.row(i).transpose() - d).norm() < 1e-6;
    CHECK(matched);
  }

  TEST_CASE("conditional weights and identities") {
    const Eigen::MatrixXd s = correlated_samples(60, 8);
    const KdeModel m = KdeModel::fit(s);
    const ConditionalKde c(m, {0}, {1});
    Eigen::VectorXd g(1);
    g << 1.4;
    const auto w = c.weights(g);
    CHECK(std::abs(w.weights.sum() - 1.0) < 1e-12);
    CHECK(w.weights.minCoeff() >= 0.0);
    const double hmm = m.bandwidth()(1, 1) - m.bandwidth()(1, 0) * m.bandwidth()(0, 1) / m.bandwidth()(0, 0);
    CHECK(w.covariance(0, 0) == doctest::Approx(hmm).epsilon(1e-12));
    for (double t : {-3.0, -2.0, -1.2}) {
      Eigen::VectorXd tv(1), z(2);
      tv << t;
      z << g[0], t;
      CHECK(std::abs(c.density(tv, g) - m.density(z) / c.given_density(g)) < 1e-10 * std::max(1.0, c.density(tv, g)));
    }
    // Component means follow the closed-form regression.
    const double slope = m.bandwidth()(1, 0) / m.bandwidth()(0, 0);
    for (int i = 0; i < 3; ++i) {
      CHECK(c.component_mean(i, g)[0] == doctest::Approx(s(i, 1) + slope * (g[0] - s(i, 0))).epsilon(1e-12));
    }
    Eigen::VectorXd far(1);
    far << 1e4;
    CHECK_THROWS_AS(c.weights(far), Error);
  }

  TEST_CASE("diagonal bandwidth keeps component means at the tuples") {
    const Eigen::MatrixXd s = correlated_samples(30, 2);
    KdeOptions o;
    o.structure = BandwidthStructure::Diagonal;
    const KdeModel m = KdeModel::fit(s, o);
    const ConditionalKde c(m, {0}, {1});
    Eigen::VectorXd g(1);
    g << 0.1;
    for (int i = 0; i < 5; ++i) CHECK(c.component_mean(i, g)[0] == s(i, 1));
  }

  TEST_CASE("single tuple and equidistant weights") {
    Eigen::MatrixXd one(1, 2);
    one << 1.0, 2.0;
    Eigen::MatrixXd h(2, 2);
    h << 1.0, 0.5, 0.5, 2.0;
    const ConditionalKde c(KdeModel::with_bandwidth(one, h), {0}, {1});
    Eigen::VectorXd g(1), t(1);
    g << 3.0;
    t << 2.4;
    const double mu = 2.0 + 0.5 * (3.0 - 1.0), var = 2.0 - 0.25;
    CHECK(c.density(t, g) ==
          doctest::Approx(std::exp(-0.5 * (2.4 - mu) * (2.4 - mu) / var) / std::sqrt(2 * pi * var)).epsilon(1e-12));

    Eigen::MatrixXd pair(2, 2);
    pair << -1.0, 0.0, 1.0, 5.0;
    const ConditionalKde e(KdeModel::with_bandwidth(pair, Eigen::MatrixXd::Identity(2, 2)), {0}, {1});
    Eigen::VectorXd mid(1);
    mid << 0.0;
    const auto w = e.weights(mid);
    CHECK(w.weights[0] == doctest::Approx(w.weights[1]).epsilon(1e-14));
  }

  TEST_CASE("log-sum-exp normalisation is shift invariant") {
    const std::vector<double> a{-1.0, -2.5, -0.3, -800.0};
    std::vector<double> b = a;
    for (auto& v : b) v += 1234.5;
    const auto wa = normalize_log_weights(a), wb = normalize_log_weights(b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(wa[i] == doctest::Approx(wb[i]).epsilon(1e-14));
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(normalize_log_weights(std::vector<double>{-inf, -inf}).empty());
  }

  TEST_CASE("conditional draws match quadrature") {
    const Eigen::MatrixXd s = correlated_samples(150, 21);
    const KdeModel m = KdeModel::fit(s);
    const ConditionalKde c(m, {0}, {1});
    Eigen::VectorXd g(1);
    g << 1.8;
    Rng rng(2024);
    std::vector<double> draws(100'000);
    for (auto& d : draws) d = c.sample(g, rng)[0];
    std::vector<double> grid;
    for (int i = 0; i <= 4000; ++i) grid.push_back(-9.0 + 14.0 * i / 4000.0);
    Eigen::VectorXd point(2);
    point << g[0], 0.0;
    const auto cdf = oracle::conditional_cdf(m.samples(), m.bandwidth(), 1, point, grid);
    CHECK(oracle::ks_distance(draws, grid, cdf) < 0.01);
  }
}
