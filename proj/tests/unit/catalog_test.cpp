#include <doctest.h>

#include <sstream>

#include "etcsim/catalog.hpp"
#include "etcsim/errors.hpp"
#include "etcsim/geometry.hpp"
#include "etcsim/grid.hpp"
#include "synthetic.hpp"

using namespace etcsim;

namespace {

std::string track_rows(const std::string& id, int n, double lon0, double lat0) {
  std::ostringstream s;
  for (int t = 0; t < n; ++t) s << id << ',' << t << ',' << lon0 + t << ',' << lat0 + 0.3 * t << ',' << 3 + 0.1 * t << '\n';
  return s.str();
}

ErrorKind kind_of(const std::string& text) {
  std::istringstream in(text);
  try {
    load_catalog(in, 1.0);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_SUITE("catalog") {
  TEST_CASE("well-formed file") {
    std::istringstream in("storm_id,time_index,lon,lat,vorticity\n" + track_rows("b", 10, -40, 45) +
                          track_rows("a", 10, -50, 40));
    LoadReport rep;
    const Catalog c = load_catalog(in, 2.0, &rep);
    REQUIRE(c.storms().size() == 2);
    for (const auto& s : c.storms()) {
      CHECK(s.size() == 10);
      CHECK(s.speed().size() == 9);
      CHECK(s.bearing().size() == 9);
    }
    CHECK(c.storms_per_year() == doctest::Approx(1.0));
    CHECK(c.point_count() == 20);
    CHECK(rep.rows == 20);
  }

  TEST_CASE("rows are sorted by time and the years comment wins") {
    std::string rows = track_rows("x", 9, 0, 50);
    std::istringstream in("# years_of_record=36\nstorm_id,time_index,lon,lat,vorticity\n" + rows.substr(rows.find('\n') + 1) +
                          rows.substr(0, rows.find('\n') + 1));
    LoadReport rep;
    const Catalog c = load_catalog(in, 1.0, &rep);
    CHECK(rep.years_from_file);
    CHECK(c.years_of_record() == 36.0);
    CHECK(c.storms()[0].points().front().time_index == 0);
  }

  TEST_CASE("short, duplicate, gapped and malformed input") {
    const std::string header = "storm_id,time_index,lon,lat,vorticity\n";
    CHECK(kind_of(header + track_rows("s", 3, 0, 50)) == ErrorKind::Validation);
    CHECK(kind_of(header + track_rows("s", 9, 0, 50) + "s,4,1,1,1\n") == ErrorKind::Validation);
    CHECK(kind_of(header + track_rows("s", 9, 0, 50) + "s,11,1,1,1\n") == ErrorKind::Validation);
    CHECK(kind_of(header + "s,0,abc,1,1\n") == ErrorKind::Parse);
    std::istringstream mixed(header + track_rows("s", 3, 0, 50) + track_rows("t", 8, 0, 50));
    LoadReport rep;
    CHECK(load_catalog(mixed, 1.0, &rep).storms().size() == 1);
    CHECK(rep.rejected_short == 1);
  }

  TEST_CASE("derived kinematics reproduce the next position") {
    const Catalog c = testing::make_synthetic_catalog({.storms = 30}, 3);
    for (const auto& s : c.storms()) {
      for (std::size_t t = 0; t + 1 < s.size(); ++t) {
        const LonLat q = destination_point(s.points()[t].position(), s.speed()[t], s.bearing()[t]);
        const double d = great_circle_distance(q, s.points()[t + 1].position());
        REQUIRE(d <= 1e-6 * std::max(1.0, s.speed()[t] * kStepSeconds));
      }
    }
  }
}

TEST_SUITE("grid") {
  TEST_CASE("half-open cells") {
    const GridSpec g = GridSpec::global(8, 4);
    CHECK(g.cell_of({-180, -90}) == Cell{0, 0});
    CHECK(g.cell_of({-172, -86}) == Cell{1, 1});
    CHECK(g.cell_of({-172.0000001, -86}) == Cell{0, 1});
    CHECK(g.flat(g.unflat(123)) == 123);
    const GridSpec local(0, 0, 1, 1, 2, 2);
    CHECK_FALSE(local.cell_of({2.0, 0.5}).has_value());
    CHECK(local.flat_index({-0.1, 0.5}) == -1);
  }

  TEST_CASE("partition of a catalog") {
    const Catalog c = testing::make_synthetic_catalog({.storms = 50}, 9);
    const GridSpec g = grid_from_catalog(c, GridSpec::global(8, 4), 3);
    std::size_t total = 0;
    for (int n : g.counts()) total += static_cast<std::size_t>(n);
    CHECK(total == c.point_count());
    for (int f : g.active_cells()) CHECK(g.counts()[f] >= 3);
    for (const auto& s : c.storms()) {
      for (const auto& p : s.points()) CHECK(g.flat_index(p.position()) >= 0);
    }
  }
}
