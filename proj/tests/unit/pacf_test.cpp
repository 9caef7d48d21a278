#include <doctest.h>

#include <cmath>
#include <random>

#include "etcsim/errors.hpp"
#include "etcsim/pacf.hpp"
#include "oracles.hpp"

using namespace etcsim;

TEST_SUITE("pacf") {
  TEST_CASE("white noise stays inside the null band") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    std::vector<double> x(10'000);
    for (auto& v : x) v = z(rng);
    const auto p = pacf(x, 10);
    CHECK(p[0] == 1.0);
    for (int k = 1; k <= 10; ++k) CHECK(std::abs(p[k]) < 2.0 / std::sqrt(10'000.0));
  }

  TEST_CASE("AR(1) agrees with OLS autoregression") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    std::vector<double> x(20'000);
    x[0] = z(rng);
    for (std::size_t t = 1; t < x.size(); ++t) x[t] = 0.8 * x[t - 1] + z(rng);
    const auto p = pacf(x, 4);
    CHECK(std::abs(p[1] - 0.8) < 0.02);
    CHECK(std::abs(p[2]) < 0.03);
    for (int k = 1; k <= 4; ++k) CHECK(std::abs(p[k] - oracle::ols_pacf(x, k)) < 0.01);
    for (double v : p) CHECK(std::abs(v) <= 1.0);
  }

  TEST_CASE("pooled series match the single-series result on one series") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    std::vector<double> x(500);
    x[0] = z(rng);
    for (std::size_t t = 1; t < x.size(); ++t) x[t] = 0.5 * x[t - 1] + z(rng);
    const auto a = pacf(x, 5);
    const auto b = pacf_pooled({x}, 5);
    for (int k = 0; k <= 5; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
  }

  TEST_CASE("constant series") {
    std::vector<double> x(50, 3.0);
    CHECK_THROWS_AS(pacf(x, 3), Error);
  }
}
