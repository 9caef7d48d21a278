#include <doctest.h>

#include <cmath>

#include "etcsim/catalog.hpp"
#include "etcsim/errors.hpp"
#include "etcsim/gam.hpp"
#include "etcsim/rng.hpp"
#include "synthetic.hpp"

using namespace etcsim;

namespace {

StormTrack straight_track(const std::string& id, int n, const std::vector<double>& vort = {}) {
  std::vector<TrackPoint> pts;
  for (int t = 0; t < n; ++t) {
    const double w = vort.empty() ? 5.0 + std::sin(t) : vort[static_cast<std::size_t>(t)];
    pts.push_back({-30.0 + t, 50.0, t, w});
  }
  return StormTrack(id, pts);
}

double logistic(double e) { return 1.0 / (1.0 + std::exp(-e)); }

GamData one_smooth(int n, std::uint64_t seed, double (*truth)(double)) {
  Rng rng(seed);
  GamData d;
  d.covariates = {GamCovariate::Lon};
  d.x.resize(n, 1);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = -3.0 + 6.0 * uniform01(rng);
    d.x(i, 0) = x;
    d.y[i] = uniform01(rng) < logistic(truth(x)) ? 1.0 : 0.0;
  }
  return d;
}

double sine_truth(double x) { return -1.0 + std::sin(x); }

}  // namespace

TEST_SUITE("gam") {
  TEST_CASE("design rows") {
    const std::vector<StormTrack> storms{straight_track("a", 10), straight_track("b", 8), straight_track("c", 12)};
    const GamData d = build_gam_data(storms);
    CHECK(d.x.rows() == 3 + 5);
    CHECK(d.excluded_storms == 1);
    CHECK_FALSE(d.warnings.empty());
    CHECK(d.y.sum() == 2.0);
    CHECK(d.y[2] == 1.0);
    CHECK(d.y[0] == 0.0);

    const std::vector<double> w{5, 6, 7, 8, 9, 10, 11, 4.5, 4.0, 3.0};
    const StormTrack s = straight_track("d", 10, w);
    const HazardInputs first = hazard_inputs(s, 7);
    CHECK(first.age == 8.0);
    CHECK(first.vorticity == 4.5);
    CHECK(first.vorticity_drop == doctest::Approx(11.0 - 4.5));

    const std::vector<char> censored{0, 0, 1};
    const GamData c = build_gam_data(storms, default_gam_covariates(), censored);
    CHECK(c.y.sum() == 1.0);

    // Hand count: rows = sum over kept storms of (length - 7).
    const Catalog toy = testing::make_synthetic_catalog({.storms = 40}, 4);
    std::size_t expect = 0;
    for (const auto& t : toy.storms()) {
      if (t.size() >= 9) expect += t.size() - 7;
    }
    CHECK(static_cast<std::size_t>(build_gam_data(toy).x.rows()) == expect);
  }

  TEST_CASE("null model") {
    GamData d;
    d.x.resize(1000, 0);
    d.y = Eigen::VectorXd::Zero(1000);
    for (int i = 0; i < 300; ++i) d.y[i * 3] = 1.0;
    const GamFit f = fit_gam(d);
    CHECK(std::abs(f.intercept - std::log(0.3 / 0.7)) < 1e-6);
    CHECK(f.hazard({.age = 9}) == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(f.hazard({.age = 5}) == 0.0);
  }

  TEST_CASE("recovers a sine hazard") {
    const GamData d = one_smooth(20'000, 11, sine_truth);
    const GamFit f = fit_gam(d);
    // Sum-to-zero smooths leave the level in the intercept; compare shapes
    // after matching means over the design.
    double offset = 0.0;
    for (int i = 0; i < d.x.rows(); ++i) offset += sine_truth(d.x(i, 0)) - (f.intercept + f.smooth(0, d.x(i, 0)));
    offset /= static_cast<double>(d.x.rows());
    double worst = 0.0;
    for (double x = -2.9; x <= 2.9; x += 0.05) worst = std::max(worst, std::abs(f.intercept + f.smooth(0, x) + offset - sine_truth(x)));
    CHECK(worst < 0.15);
    CHECK(std::abs(offset) < 0.05);

    // Score equation: fitted probabilities add up to the observed terminations.
    double total = 0.0;
    for (int i = 0; i < d.x.rows(); ++i) total += logistic(f.intercept + f.smooth(0, d.x(i, 0)));
    CHECK(total == doctest::Approx(d.y.sum()).epsilon(1e-6));

    REQUIRE(f.gcv_profile.size() == 1);
    for (double g : f.gcv_profile[0]) CHECK(f.gcv <= g + 1e-12 * std::abs(g));
    CHECK(f.aic == doctest::Approx(f.deviance + 2 * f.edf));
  }

  TEST_CASE("heavy penalty leaves a straight line") {
    const GamData d = one_smooth(5000, 12, sine_truth);
    GamOptions o;
    o.fixed_lambda = {1e9};
    const GamFit f = fit_gam(d, o);
    for (double x = -2.5; x <= 2.5; x += 0.5) {
      const double curv = f.smooth(0, x - 0.25) - 2 * f.smooth(0, x) + f.smooth(0, x + 0.25);
      CHECK(std::abs(curv) < 1e-3);
    }
  }

  TEST_CASE("hazard range and monotone age effect") {
    GamData d;
    d.covariates = {GamCovariate::Age};
    Rng rng(13);
    const int n = 8000;
    d.x.resize(n, 1);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
      const double age = 8 + std::floor(60 * uniform01(rng));
      d.x(i, 0) = age;
      d.y[i] = uniform01(rng) < logistic(-3.0 + 0.06 * (age - 8)) ? 1.0 : 0.0;
    }
    const GamFit f = fit_gam(d);
    double prev = 0.0;
    for (double age = 8; age <= 67; age += 1) {
      const double h = f.hazard({.age = age});
      CHECK(h > 0.0);
      CHECK(h < 1.0);
      CHECK(h >= prev - 1e-3);
      prev = h;
    }
    GamFit zero = f;
    zero.intercept = 0.0;
    for (auto& c : zero.smooth_coef) c.setZero();
    CHECK(zero.hazard({.age = 20}) == 0.5);
  }

  TEST_CASE("separation and degenerate outcomes") {
    GamData d;
    d.covariates = {GamCovariate::Lon};
    d.x.resize(400, 1);
    d.y.resize(400);
    for (int i = 0; i < 400; ++i) {
      d.x(i, 0) = i / 40.0;
      d.y[i] = i >= 200 ? 1.0 : 0.0;
    }
    GamOptions o;
    o.fixed_lambda = {1e-4};
    try {
      fit_gam(d, o);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Separation);
    }
    d.y.setZero();
    CHECK_THROWS_AS(fit_gam(d), Error);
  }

  TEST_CASE("covariate names") {
    for (auto c : {GamCovariate::Vorticity, GamCovariate::VorticityDrop, GamCovariate::Age, GamCovariate::Lon, GamCovariate::Lat}) {
      CHECK(gam_covariate_from_string(to_string(c)) == c);
    }
    CHECK_THROWS_AS(gam_covariate_from_string("pressure"), Error);
  }
}
