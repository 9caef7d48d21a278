#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "etcsim/bundle_io.hpp"
#include "etcsim/errors.hpp"
#include "fixtures.hpp"

using namespace etcsim;
using testing::toy_bundle;

TEST_SUITE("bundle") {
  TEST_CASE("json round trip is byte identical") {
    const std::string text = bundle_to_json(toy_bundle());
    const ModelBundle back = bundle_from_json(text);
    CHECK(bundle_to_json(back) == text);

    SimulationOptions o;
    o.storms = 20;
    o.seed = 3;
    const auto a = simulate_catalog(toy_bundle(), o);
    const auto b = simulate_catalog(back, o);
    for (std::size_t i = 0; i < a.storms.size(); ++i) {
      REQUIRE(a.storms[i].track.size() == b.storms[i].track.size());
      CHECK(a.storms[i].track.points().back().vorticity == b.storms[i].track.points().back().vorticity);
    }
  }

  TEST_CASE("refitting gives the same bytes") {
    CHECK(bundle_to_json(fit_all(testing::toy_catalog())) == bundle_to_json(toy_bundle()));
  }

  TEST_CASE("schema checks") {
    auto j = nlohmann::json::parse(bundle_to_json(toy_bundle()));
    j["version"] = 99;
    try {
      bundle_from_json(j.dump());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Schema);
    }
    auto k = nlohmann::json::parse(bundle_to_json(toy_bundle()));
    k.erase("hazard");
    CHECK_THROWS_AS(bundle_from_json(k.dump()), Error);
    CHECK_THROWS_AS(bundle_from_json("{not json"), Error);
  }

  TEST_CASE("engine config") {
    EngineConfig c;
    c.order = 2;
    c.threshold = 1.2;
    c.termination_region = {{-10, 40}, {10, 40}, {10, 60}};
    c.hazard_covariates = {GamCovariate::Age, GamCovariate::Lat};
    const std::string text = engine_config_to_json(c);
    const EngineConfig back = engine_config_from_json(text);
    CHECK(engine_config_to_json(back) == text);
    CHECK(back.order == 2);
    CHECK(back.termination_region.size() == 3);
    const EngineConfig partial = engine_config_from_json(R"({"threshold": 1.8})");
    CHECK(partial.threshold == 1.8);
    CHECK(partial.order == 3);
    CHECK_THROWS_AS(engine_config_from_json(R"({"treshold": 1.8})"), Error);
  }

  TEST_CASE("synthetic csv reads back as a catalog") {
    SimulationOptions o;
    o.storms = 15;
    o.seed = 8;
    const SyntheticCatalog s = simulate_catalog(toy_bundle(), o);
    std::stringstream buf;
    write_synthetic_csv(s, buf, {"note"});
    const std::string text = buf.str();
    CHECK(text.find("seed,sampler_tag,termination_cause") != std::string::npos);
    LoadReport rep;
    const Catalog c = load_catalog(buf, 1.0, &rep);
    CHECK(rep.years_from_file);
    CHECK(c.years_of_record() == doctest::Approx(s.years_of_record).epsilon(1e-12));
    REQUIRE(c.storms().size() == 15);
    std::size_t total = 0;
    for (const auto& t : s.storms) total += t.track.size();
    CHECK(c.point_count() == total);
  }
}
