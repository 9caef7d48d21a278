#include "etcsim/risk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "etcsim/errors.hpp"
#include "etcsim/evt.hpp"
#include "etcsim/geometry.hpp"
#include "etcsim/rng.hpp"

namespace etcsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> region_values(const CatalogView& view, const Region& region) {
  std::vector<double> v;
  for (const auto* s : view.storms) {
    for (const auto& p : s->points()) {
      if (region.contains(p.lon, p.lat)) v.push_back(p.vorticity);
    }
  }
  return v;
}

// Type-7 quantile of already sorted values.
double sorted_quantile(const std::vector<double>& s, double p) {
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

template <class F>
void parallel_for(std::size_t n, int workers, F&& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

CatalogView resample(const CatalogView& view, Rng& rng) {
  CatalogView out;
  out.years_of_record = view.years_of_record;
  out.storms.resize(view.storms.size());
  std::uniform_int_distribution<std::size_t> pick(0, view.storms.size() - 1);
  for (auto& s : out.storms) s = view.storms[pick(rng)];
  return out;
}

std::vector<double> default_probs() {
  std::vector<double> p;
  for (int i = 1; i <= 100; ++i) p.push_back((i - 0.5) / 100.0);
  return p;
}

}  // namespace

void Region::validate() const {
  if (!(lon_min < lon_max) || !(lat_min < lat_max)) {
    throw Error(ErrorKind::Validation, "region bounds must satisfy min < max");
  }
}

CatalogView CatalogView::of(const Catalog& catalog) {
  CatalogView v;
  v.years_of_record = catalog.years_of_record();
  for (const auto& s : catalog.storms()) v.storms.push_back(&s);
  return v;
}

std::string to_string(RiskMarker m) {
  switch (m) {
    case RiskMarker::None: return "";
    case RiskMarker::Infinite: return "infinite";
    case RiskMarker::ExtrapolationUnsupported: return "extrapolation-unsupported";
    case RiskMarker::BelowRange: return "below-range";
  }
  return "";
}

RiskResult exceedance_prob(const CatalogView& view, const Region& region, double omega) {
  region.validate();
  RiskResult r;
  for (const auto* s : view.storms) {
    for (const auto& p : s->points()) {
      if (!region.contains(p.lon, p.lat)) continue;
      ++r.denominator;
      if (p.vorticity > omega) ++r.numerator;
    }
  }
  if (r.denominator == 0) throw Error(ErrorKind::UndefinedRegion, "no catalog points inside the region");
  r.estimate = static_cast<double>(r.numerator) / static_cast<double>(r.denominator);
  return r;
}

RiskResult exceedance_prob(const Catalog& c, const Region& region, double omega) {
  return exceedance_prob(CatalogView::of(c), region, omega);
}

RiskResult max_exceedance_prob(const CatalogView& view, const Region& region, double omega) {
  region.validate();
  RiskResult r;
  for (const auto* s : view.storms) {
    bool entered = false;
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& p : s->points()) {
      if (!region.contains(p.lon, p.lat)) continue;
      entered = true;
      mx = std::max(mx, p.vorticity);
    }
    if (!entered) continue;
    ++r.denominator;
    if (mx > omega) ++r.numerator;
  }
  if (r.denominator == 0) throw Error(ErrorKind::UndefinedRegion, "no storm enters the region");
  r.estimate = static_cast<double>(r.numerator) / static_cast<double>(r.denominator);
  return r;
}

RiskResult max_exceedance_prob(const Catalog& c, const Region& region, double omega) {
  return max_exceedance_prob(CatalogView::of(c), region, omega);
}

RiskResult return_period(const CatalogView& view, const Region& region, double omega) {
  region.validate();
  RiskResult r;
  for (double v : region_values(view, region)) {
    ++r.denominator;
    if (v > omega) ++r.numerator;
  }
  if (r.denominator == 0) throw Error(ErrorKind::UndefinedRegion, "no catalog points inside the region");
  if (r.numerator == 0) {
    r.estimate = std::numeric_limits<double>::infinity();
    r.marker = RiskMarker::Infinite;
  } else {
    r.estimate = view.years_of_record / static_cast<double>(r.numerator);
  }
  return r;
}

RiskResult return_period(const Catalog& c, const Region& region, double omega) {
  return return_period(CatalogView::of(c), region, omega);
}

RiskResult return_level(const CatalogView& view, const Region& region, double r_years) {
  region.validate();
  if (!(r_years > 0.0)) throw Error(ErrorKind::Argument, "return period must be positive");
  auto v = region_values(view, region);
  if (v.empty()) throw Error(ErrorKind::UndefinedRegion, "no catalog points inside the region");
  std::sort(v.begin(), v.end(), std::greater<>());
  RiskResult r;
  r.denominator = v.size();
  const double m = view.years_of_record / r_years;
  if (m < 1.0) {
    r.estimate = kNaN;
    r.marker = RiskMarker::ExtrapolationUnsupported;
    return r;
  }
  const auto j = static_cast<std::size_t>(std::llround(m));
  r.numerator = j;
  if (j >= v.size()) {
    r.estimate = v.back();
    r.marker = RiskMarker::BelowRange;
    return r;
  }
  r.estimate = v[j];
  return r;
}

RiskResult return_level(const Catalog& c, const Region& region, double r_years) {
  return return_level(CatalogView::of(c), region, r_years);
}

DensitySubset density_subset_from_string(const std::string& s) {
  if (s == "all") return DensitySubset::All;
  if (s == "genesis") return DensitySubset::Genesis;
  if (s == "lysis") return DensitySubset::Lysis;
  throw Error(ErrorKind::Validation, "density subset must be all, genesis or lysis");
}

std::string to_string(DensitySubset s) {
  switch (s) {
    case DensitySubset::All: return "all";
    case DensitySubset::Genesis: return "genesis";
    case DensitySubset::Lysis: return "lysis";
  }
  return "all";
}

std::vector<double> spatial_density(const CatalogView& view, const GridSpec& grid, DensitySubset subset,
                                    bool area_weighted) {
  std::vector<double> d(static_cast<std::size_t>(grid.cell_count()), 0.0);
  const auto add = [&](const TrackPoint& p) {
    const int f = grid.flat_index(p.position());
    if (f >= 0) d[static_cast<std::size_t>(f)] += 1.0;
  };
  for (const auto* s : view.storms) {
    const auto& pts = s->points();
    switch (subset) {
      case DensitySubset::All:
        for (const auto& p : pts) add(p);
        break;
      case DensitySubset::Genesis: add(pts.front()); break;
      case DensitySubset::Lysis: add(pts.back()); break;
    }
  }
  if (area_weighted) {
    for (int f = 0; f < grid.cell_count(); ++f) {
      const double c = std::cos(deg2rad(grid.center(f).lat));
      if (c > 1e-12) d[static_cast<std::size_t>(f)] /= c;
    }
  }
  double total = 0.0;
  for (double x : d) total += x;
  if (total > 0.0) {
    for (double& x : d) x /= total;
  }
  return d;
}

std::vector<double> spatial_density(const Catalog& c, const GridSpec& grid, DensitySubset subset,
                                    bool area_weighted) {
  return spatial_density(CatalogView::of(c), grid, subset, area_weighted);
}

BootstrapResult bootstrap_ci(const CatalogStatistic& statistic, const CatalogView& view,
                             const BootstrapOptions& options) {
  if (options.replicates < 200) throw Error(ErrorKind::Argument, "bootstrap needs at least 200 replicates");
  if (!(options.level > 0.0 && options.level < 1.0)) throw Error(ErrorKind::Argument, "bootstrap level must lie in (0, 1)");
  if (view.storms.empty()) throw Error(ErrorKind::Argument, "bootstrap of an empty catalog");
  BootstrapResult res;
  res.values.assign(static_cast<std::size_t>(options.replicates), kNaN);
  parallel_for(res.values.size(), options.workers, [&](std::size_t b) {
    Rng rng = make_stream(options.seed, b);
    for (int attempt = 0; attempt <= options.max_redraws; ++attempt) {
      const CatalogView rs = resample(view, rng);
      std::optional<double> v;
      try {
        v = statistic(rs);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::UndefinedRegion) throw;
      }
      if (v && std::isfinite(*v)) {
        res.values[b] = *v;
        return;
      }
    }
  });
  std::vector<double> ok;
  for (double v : res.values) {
    if (std::isnan(v)) {
      ++res.undefined;
    } else {
      ok.push_back(v);
    }
  }
  if (!ok.empty()) {
    std::sort(ok.begin(), ok.end());
    const double a = 0.5 * (1.0 - options.level);
    res.lo = sorted_quantile(ok, a);
    res.hi = sorted_quantile(ok, 1.0 - a);
  }
  return res;
}

BootstrapResult bootstrap_ci(const CatalogStatistic& statistic, const Catalog& catalog,
                             const BootstrapOptions& options) {
  return bootstrap_ci(statistic, CatalogView::of(catalog), options);
}

void attach_interval(RiskResult& result, const BootstrapResult& boot) {
  result.ci_lo = boot.lo;
  result.ci_hi = boot.hi;
  if (std::isfinite(result.estimate) && !std::isnan(boot.lo)) {
    result.ci_lo = std::min(result.ci_lo, result.estimate);
    result.ci_hi = std::max(result.ci_hi, result.estimate);
  }
}

DensityBands density_bootstrap(const Catalog& catalog, const GridSpec& grid, DensitySubset subset,
                               const BootstrapOptions& options) {
  if (options.replicates < 200) throw Error(ErrorKind::Argument, "bootstrap needs at least 200 replicates");
  const CatalogView view = CatalogView::of(catalog);
  DensityBands out;
  out.estimate = spatial_density(view, grid, subset);
  const auto cells = static_cast<std::size_t>(grid.cell_count());
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(options.replicates));
  parallel_for(reps.size(), options.workers, [&](std::size_t b) {
    Rng rng = make_stream(options.seed, b);
    reps[b] = spatial_density(resample(view, rng), grid, subset);
  });
  out.lo.resize(cells);
  out.hi.resize(cells);
  const double a = 0.5 * (1.0 - options.level);
  std::vector<double> col(reps.size());
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t b = 0; b < reps.size(); ++b) col[b] = reps[b][c];
    std::sort(col.begin(), col.end());
    out.lo[c] = sorted_quantile(col, a);
    out.hi[c] = sorted_quantile(col, 1.0 - a);
  }
  return out;
}

namespace {

std::vector<QqRow> envelope_from(const std::vector<double>& obs_sorted, const std::vector<double>& sim_sorted,
                                 const std::vector<std::vector<double>>& rep_sorted, const QqOptions& o) {
  const auto probs = o.probs.empty() ? default_probs() : o.probs;
  const double a = 0.5 * (1.0 - o.level);
  std::vector<QqRow> rows;
  std::vector<double> q(rep_sorted.size());
  for (double p : probs) {
    QqRow r;
    r.prob = p;
    r.observed = sorted_quantile(obs_sorted, p);
    r.simulated = sorted_quantile(sim_sorted, p);
    for (std::size_t b = 0; b < rep_sorted.size(); ++b) q[b] = sorted_quantile(rep_sorted[b], p);
    std::sort(q.begin(), q.end());
    r.lo = sorted_quantile(q, a);
    r.hi = sorted_quantile(q, 1.0 - a);
    r.inside = r.observed >= r.lo && r.observed <= r.hi;
    rows.push_back(r);
  }
  return rows;
}

void check_qq(const QqOptions& o) {
  if (o.replicates < 2) throw Error(ErrorKind::Argument, "QQ envelope needs replicates");
  if (!(o.level > 0.0 && o.level < 1.0)) throw Error(ErrorKind::Argument, "QQ level must lie in (0, 1)");
  for (double p : o.probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Argument, "QQ probabilities must lie in [0, 1]");
  }
}

}  // namespace

std::vector<QqRow> qq_envelope(std::span<const double> observed, std::span<const double> simulated,
                               const QqOptions& options) {
  check_qq(options);
  if (observed.empty() || simulated.empty()) throw Error(ErrorKind::Argument, "QQ envelope of an empty sample");
  std::vector<double> obs(observed.begin(), observed.end()), sim(simulated.begin(), simulated.end());
  std::sort(obs.begin(), obs.end());
  std::sort(sim.begin(), sim.end());
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(options.replicates));
  for (std::size_t b = 0; b < reps.size(); ++b) {
    Rng rng = make_stream(options.seed, b);
    std::uniform_int_distribution<std::size_t> pick(0, sim.size() - 1);
    reps[b].resize(obs.size());
    for (auto& v : reps[b]) v = sim[pick(rng)];
    std::sort(reps[b].begin(), reps[b].end());
  }
  return envelope_from(obs, sim, reps, options);
}

std::vector<QqRow> qq_envelope_grouped(const std::vector<std::vector<double>>& observed,
                                       const std::vector<std::vector<double>>& simulated,
                                       const QqOptions& options) {
  check_qq(options);
  std::vector<double> obs, sim;
  for (const auto& g : observed) obs.insert(obs.end(), g.begin(), g.end());
  for (const auto& g : simulated) sim.insert(sim.end(), g.begin(), g.end());
  if (obs.empty() || sim.empty()) throw Error(ErrorKind::Argument, "QQ envelope of an empty sample");
  std::sort(obs.begin(), obs.end());
  std::sort(sim.begin(), sim.end());
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(options.replicates));
  for (std::size_t b = 0; b < reps.size(); ++b) {
    Rng rng = make_stream(options.seed, b);
    std::uniform_int_distribution<std::size_t> pick(0, simulated.size() - 1);
    for (std::size_t i = 0; i < observed.size(); ++i) {
      const auto& g = simulated[pick(rng)];
      reps[b].insert(reps[b].end(), g.begin(), g.end());
    }
    if (reps[b].empty()) reps[b].push_back(sim.front());
    std::sort(reps[b].begin(), reps[b].end());
  }
  return envelope_from(obs, sim, reps, options);
}

double fraction_inside(const std::vector<QqRow>& rows) {
  if (rows.empty()) return 0.0;
  std::size_t in = 0;
  for (const auto& r : rows) in += r.inside ? 1 : 0;
  return static_cast<double>(in) / static_cast<double>(rows.size());
}

}  // namespace etcsim
