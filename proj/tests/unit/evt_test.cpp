#include <doctest.h>

#include <cmath>
#include <random>

#include "etcsim/errors.hpp"
#include "etcsim/evt.hpp"
#include "etcsim/rng.hpp"

using namespace etcsim;

namespace {

std::vector<double> gpd_sample(int n, double psi, double xi, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = psi * (std::pow(1.0 - uniform01(rng), -xi) - 1.0) / xi;
  return x;
}

std::vector<double> normal_sample(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = standard_normal(rng);
  return x;
}

}  // namespace

TEST_SUITE("evt") {
  TEST_CASE("GPD survival closed forms") {
    CHECK(gpd_survival(1.0, -0.5, 1.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(gpd_survival(1.0, -0.5, 2.0) == 0.0);
    CHECK(gpd_survival(1.0, -0.5, 5.0) == 0.0);
    CHECK(std::abs(gpd_survival(0.7, 1e-12, 1.3) - std::exp(-1.3 / 0.7)) < 1e-9);
    for (double p : {0.9, 0.5, 0.1, 1e-4}) {
      CHECK(gpd_survival(0.449, -0.246, gpd_excess_quantile(0.449, -0.246, p)) == doctest::Approx(p).epsilon(1e-10));
    }
  }

  TEST_CASE("maximum likelihood beats a 100 x 100 grid") {
    const auto x = gpd_sample(2000, 0.449, -0.246, 17);
    const GpdFit f = fit_gpd_excesses(x);
    CHECK(f.converged);
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 100; ++j) {
        const double psi = 0.3 + 0.3 * i / 99.0, xi = -0.5 + 0.5 * j / 99.0;
        best = std::max(best, gpd_log_likelihood(x, psi, xi));
      }
    }
    CHECK(f.log_likelihood >= best - 1e-9);
    CHECK(std::abs(f.scale - 0.449) < 0.05);
    CHECK(std::abs(f.shape + 0.246) < 0.08);
    const auto z = f.upper_endpoint();
    REQUIRE(z.has_value());
    for (double v : x) CHECK(v < *z);
  }

  TEST_CASE("exponential data") {
    Rng rng(3);
    std::vector<double> x(10'000);
    for (auto& v : x) v = -std::log(1.0 - uniform01(rng)) * 2.0;
    const GpdFit f = fit_gpd_excesses(x);
    CHECK(std::abs(f.shape) < 0.05);
    CHECK(f.scale == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("too few exceedances") {
    const auto x = normal_sample(500, 4);
    try {
      fit_gpd(x, 2.8);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientTail);
    }
  }

  TEST_CASE("mixture marginal") {
    const auto x = normal_sample(20'000, 5);
    const KernelCdf body = KernelCdf::fit(x);
    const GpdFit g = fit_gpd(x, 1.5, body);
    CHECK(g.exceed_rate == doctest::Approx(1.0 - body(1.5)).epsilon(1e-12));
    const MixtureMarginal m(body, g);
    CHECK(std::abs(m.cdf(1.5) - (1.0 - g.exceed_rate)) < 1e-12);
    CHECK(std::abs(m.cdf(std::nextafter(1.5, 2.0)) - m.cdf(1.5)) < 1e-12);
    double prev = 0.0;
    for (double z = -6.0; z <= 6.0; z += 0.01) {
      const double c = m.cdf(z);
      CHECK(c >= prev);
      prev = c;
      if (c > 1e-9 && c < 1 - 1e-9) REQUIRE(std::abs(m.quantile(c) - z) < 1e-8);
    }
    // Upper probabilities come from the GPD inverse.
    const double p = 1.0 - 0.5 * g.exceed_rate;
    CHECK(m.quantile(p) == doctest::Approx(1.5 + gpd_excess_quantile(g.scale, g.shape, 0.5)).epsilon(1e-12));
    CHECK(m.survival(1.5 + 10.0) == 0.0);
  }

  TEST_CASE("Laplace margins") {
    CHECK(laplace_from_cdf(0.5, 0.5) == 0.0);
    CHECK(laplace_from_cdf(0.975, 0.025) == doctest::Approx(2.99573227).epsilon(1e-8));
    CHECK(laplace_from_cdf(0.0, 1.0) == -kLaplaceClamp);
    CHECK(laplace_from_cdf(1.0, 0.0) == kLaplaceClamp);

    const auto x = normal_sample(20'000, 6);
    const MixtureMarginal m(KernelCdf::fit(x), fit_gpd(x, 1.5, KernelCdf::fit(x)));
    for (double z = -3.5; z < 2.5; z += 0.05) CHECK(std::abs(m.from_laplace(m.to_laplace(z)) - z) < 1e-8);
    std::vector<double> s;
    for (double v : x) s.push_back(m.to_laplace(v));
    const double med = empirical_quantile(s, 0.5);
    CHECK(std::abs(med) < 3.0 / std::sqrt(20'000.0));  // se of a Laplace median
    for (double t : {1.0, 2.0, 3.0}) {
      const double want = 0.5 * std::exp(-t);
      const double got = static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v > t; })) / s.size();
      CHECK(std::abs(got - want) < 4.0 * std::sqrt(want * (1 - want) / s.size()) + 0.005);
    }
  }

  TEST_CASE("mean residual life") {
    Rng rng(8);
    std::vector<double> e(20'000);
    for (auto& v : e) v = -std::log(1.0 - uniform01(rng)) * 1.5;
    const std::vector<double> u{0.0, 0.5, 1.0, 2.0, 100.0};
    const auto rows = mean_residual_life(e, u);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) CHECK((r.ci_lo <= 1.5 + 0.05 && 1.5 - 0.05 <= r.ci_hi));

    const auto g = gpd_sample(100'000, 1.0, -0.25, 9);
    const auto gr = mean_residual_life(g, std::vector<double>{0.0, 1.0});
    const double slope = (gr[1].mean_excess - gr[0].mean_excess) / 1.0;
    CHECK(slope == doctest::Approx(-0.25 / 1.25).epsilon(0.1));
    CHECK_THROWS_AS(mean_residual_life(g, std::vector<double>{}), Error);
  }

  TEST_CASE("chi at level q") {
    Rng rng(12);
    std::vector<double> a(200'000), b(200'000);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = standard_normal(rng);
      b[i] = standard_normal(rng);
    }
    const auto ind = chi_tau(a, b, 0.95);
    REQUIRE(ind.has_value());
    CHECK(std::abs(*ind - 0.05) < 0.01);
    CHECK(chi_tau(a, a, 0.95).value() == doctest::Approx(1.0));
    std::vector<double> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = 0.6 * a[i] + 0.8 * b[i];
    const double lo = chi_tau(a, c, 0.9).value(), hi = chi_tau(a, c, 0.99).value();
    CHECK(hi > 0.0);
    CHECK(hi < lo);
  }
}
