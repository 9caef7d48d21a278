#include <doctest.h>

#include <cmath>
#include <numbers>

#include "etcsim/errors.hpp"
#include "etcsim/evt.hpp"
#include "fixtures.hpp"
#include "synthetic.hpp"

using namespace etcsim;
using testing::toy_bundle;
using testing::toy_catalog;
using testing::toy_simulator;

namespace {

// Genesis-location CDF on a 0.2 degree lattice aligned with the model grid:
// kernel density restricted to active cells, integrated cell by cell.
struct GenesisOracle {
  double lon0, lat0, step = 0.2;
  int nx, ny;
  std::vector<double> cdf;  // (nx + 1) x (ny + 1) corner values, row-major in x

  explicit GenesisOracle(const ModelBundle& b) {
    const GridSpec& g = b.grid;
    double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
    for (int f : g.active_cells()) {
      const Cell c = g.unflat(f);
      lo_x = std::min(lo_x, g.lon0() + c.ix * g.dlon());
      hi_x = std::max(hi_x, g.lon0() + (c.ix + 1) * g.dlon());
      lo_y = std::min(lo_y, g.lat0() + c.iy * g.dlat());
      hi_y = std::max(hi_y, g.lat0() + (c.iy + 1) * g.dlat());
    }
    lon0 = lo_x;
    lat0 = lo_y;
    nx = static_cast<int>(std::lround((hi_x - lo_x) / step));
    ny = static_cast<int>(std::lround((hi_y - lo_y) / step));
    const Eigen::MatrixXd& s = b.genesis_location.samples();
    const Eigen::Matrix2d inv = b.genesis_location.bandwidth().inverse();
    std::vector<double> mass(static_cast<std::size_t>(nx) * ny, 0.0);
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const double x = lon0 + (i + 0.5) * step, y = lat0 + (j + 0.5) * step;
        if (!g.is_active(g.flat_index({x, y}))) continue;
        double f = 0.0;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
          const double dx = x - s(r, 0), dy = y - s(r, 1);
          f += std::exp(-0.5 * (inv(0, 0) * dx * dx + 2 * inv(0, 1) * dx * dy + inv(1, 1) * dy * dy));
        }
        mass[static_cast<std::size_t>(i) * ny + j] = f;
      }
    }
    cdf.assign(static_cast<std::size_t>(nx + 1) * (ny + 1), 0.0);
    for (int i = 1; i <= nx; ++i) {
      for (int j = 1; j <= ny; ++j) {
        cdf[at(i, j)] = mass[static_cast<std::size_t>(i - 1) * ny + (j - 1)] + cdf[at(i - 1, j)] + cdf[at(i, j - 1)] -
                        cdf[at(i - 1, j - 1)];
      }
    }
    const double total = cdf.back();
    for (auto& c : cdf) c /= total;
  }

  std::size_t at(int i, int j) const { return static_cast<std::size_t>(i) * (ny + 1) + j; }

  double ks(const std::vector<std::array<double, 2>>& draws) const {
    std::vector<double> emp(cdf.size(), 0.0);
    for (const auto& d : draws) {
      const int i = static_cast<int>(std::floor((d[0] - lon0) / step)) + 1;
      const int j = static_cast<int>(std::floor((d[1] - lat0) / step)) + 1;
      emp[at(std::clamp(i, 0, nx), std::clamp(j, 0, ny))] += 1.0;
    }
    for (int i = 0; i <= nx; ++i) {
      for (int j = 0; j <= ny; ++j) {
        double v = emp[at(i, j)];
        if (i > 0) v += emp[at(i - 1, j)];
        if (j > 0) v += emp[at(i, j - 1)];
        if (i > 0 && j > 0) v -= emp[at(i - 1, j - 1)];
        emp[at(i, j)] = v;
      }
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < cdf.size(); ++k) worst = std::max(worst, std::abs(emp[k] / draws.size() - cdf[k]));
    return worst;
  }
};

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("fit report") {
    const ModelBundle& b = toy_bundle();
    CHECK(b.report.storms == toy_catalog().storms().size());
    CHECK(b.report.points == toy_catalog().point_count());
    CHECK(b.cells.size() == b.grid.active_cells().size());
    CHECK(b.config.order == 3);
    CHECK(b.config.threshold == 1.5);
    REQUIRE(b.preprocess.has_value());
    REQUIRE(b.marginal.has_value());
    REQUIRE(b.condex.has_value());
    CHECK(b.condex->order == 3);
    CHECK(b.laplace_threshold() == doctest::Approx(b.marginal->to_laplace(1.5)));
    CHECK(b.storms_per_year == doctest::Approx(80.0));
  }

  TEST_CASE("one storm is not enough") {
    const Catalog& c = toy_catalog();
    const Catalog one({c.storms().front()}, 1.0);
    CHECK_THROWS_AS(fit_all(one), Error);
  }

  TEST_CASE("genesis locations follow the fitted density") {
    const Simulator& sim = toy_simulator();
    Rng rng(31);
    std::vector<std::array<double, 2>> draws;
    for (int i = 0; i < 10'000; ++i) {
      const auto g = sim.simulate_genesis(rng);
      CHECK(g[2] > 0.0);
      CHECK(g[4] > 0.0);
      CHECK(std::abs(g[3]) <= std::numbers::pi);
      CHECK(toy_bundle().grid.is_active(toy_bundle().grid.flat_index({g[0], g[1]})));
      draws.push_back({g[0], g[1]});
    }
    const GenesisOracle oracle(toy_bundle());
    CHECK(oracle.ks(draws) < 0.02);
  }

  TEST_CASE("forced hazard") {
    const Simulator& sim = toy_simulator();
    SimulationOptions o;
    o.storms = 50;
    o.seed = 4;
    o.forced_hazard = 1.0;
    for (const auto& s : sim.simulate_catalog(o).storms) {
      CHECK(s.track.size() == 8);
      CHECK(s.cause == TerminationCause::Hazard);
    }
    // Toy tracks leave the active domain long before 400 steps, so the cap is
    // exercised at 30.
    o.forced_hazard = 0.0;
    o.max_age = 30;
    std::size_t capped = 0;
    for (const auto& s : sim.simulate_catalog(o).storms) {
      CHECK(s.cause != TerminationCause::Hazard);
      if (s.cause == TerminationCause::MaxAge) {
        ++capped;
        CHECK(s.track.size() == 30);
      }
    }
    CHECK(capped > 10);
  }

  TEST_CASE("simulated storms respect the contract") {
    const ModelBundle& b = toy_bundle();
    SimulationOptions o;
    o.storms = 400;
    o.seed = 12;
    const SyntheticCatalog cat = toy_simulator().simulate_catalog(o);
    CHECK(cat.storms.size() == 400);
    CHECK(cat.years_of_record == doctest::Approx(400.0 / b.storms_per_year));
    const auto& gpd = b.marginal->gpd();
    const auto endpoint = gpd.upper_endpoint();
    for (const auto& s : cat.storms) {
      CHECK(s.track.size() >= 8);
      REQUIRE(s.tags.size() == s.track.size());
      CHECK(s.tags.front() == SamplerTag::Genesis);
      for (std::size_t t = 0; t < s.track.size(); ++t) {
        const auto& p = s.track.points()[t];
        REQUIRE(b.grid.is_active(b.grid.flat_index(p.position())));
        CHECK(p.vorticity > 0.0);
        if (endpoint && b.preprocess->window.contains(p.lon, p.lat)) {
          CHECK(to_residual(p.vorticity, point_covariates(s.track, t), *b.preprocess) <= *endpoint + 1e-9);
        }
      }
    }
    // Tail-chain steps occur at roughly the marginal exceedance rate.
    const double steps = static_cast<double>(cat.stats.tail_chain_steps + cat.stats.body_steps);
    const double share = cat.stats.tail_chain_steps / steps;
    CHECK(share > 0.5 * gpd.empirical_rate);
    CHECK(share < 1.5 * gpd.empirical_rate);
  }

  TEST_CASE("determinism and worker invariance") {
    const Simulator& sim = toy_simulator();
    SimulationOptions o;
    o.storms = 100;
    o.seed = 77;
    const auto a = sim.simulate_catalog(o);
    o.workers = 4;
    const auto b = sim.simulate_catalog(o);
    REQUIRE(a.storms.size() == b.storms.size());
    for (std::size_t i = 0; i < a.storms.size(); ++i) {
      const auto& pa = a.storms[i].track.points();
      const auto& pb = b.storms[i].track.points();
      REQUIRE(pa.size() == pb.size());
      for (std::size_t t = 0; t < pa.size(); ++t) {
        CHECK(pa[t].lon == pb[t].lon);
        CHECK(pa[t].vorticity == pb[t].vorticity);
      }
      CHECK(a.storms[i].tags == b.storms[i].tags);
    }
    // A recorded seed regenerates its storm.
    const auto again = sim.simulate_storm(a.storms[17].seed, o);
    REQUIRE(again.track.size() == a.storms[17].track.size());
    for (std::size_t t = 0; t < again.track.size(); ++t) {
      CHECK(again.track.points()[t].lat == a.storms[17].track.points()[t].lat);
    }
  }

  TEST_CASE("termination region gates the hazard") {
    EngineConfig cfg = toy_bundle().config;
    ModelBundle b = toy_bundle();
    b.config.termination_region = {{100, 0}, {110, 0}, {110, 10}, {100, 10}};
    const Simulator sim(b);
    SimulationOptions o;
    o.storms = 30;
    o.seed = 5;
    o.max_age = 40;
    for (const auto& s : sim.simulate_catalog(o).storms) CHECK(s.cause != TerminationCause::Hazard);
    CHECK(point_in_polygon({105, 5}, b.config.termination_region));
    CHECK_FALSE(point_in_polygon({95, 5}, b.config.termination_region));
    CHECK(cfg.termination_region.empty());
  }

  TEST_CASE("tag and cause names") {
    CHECK(to_string(SamplerTag::TailChain) == "tail-chain");
    CHECK(to_string(SamplerTag::Body) == "body");
    CHECK(to_string(TerminationCause::MaxAge) == "max-age");
    CHECK(to_string(TerminationCause::Geographic) == "geographic");
  }
}
