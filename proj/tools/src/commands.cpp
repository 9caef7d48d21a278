#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "etcsim/bundle_io.hpp"
#include "etcsim/errors.hpp"
#include "etcsim/pacf.hpp"
#include "etcsim/rng.hpp"
#include "etcsim_cli/cli.hpp"

namespace etcsim::cli {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = cfg.output_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << "# config: " << cfg.echo() << '\n';
  return out;
}

Catalog read_catalog(const RunConfig& cfg) {
  if (cfg.catalog.empty()) throw Error(ErrorKind::Argument, "no catalog given (--catalog or config 'catalog')");
  if (!std::filesystem::exists(cfg.catalog)) {
    throw Error(ErrorKind::Io, "catalog '" + cfg.catalog.string() + "' does not exist");
  }
  LoadReport rep;
  Catalog c = load_catalog(cfg.catalog, cfg.years_of_record.value_or(1.0), &rep);
  if (!cfg.years_of_record && !rep.years_from_file) {
    throw Error(ErrorKind::Validation, "years_of_record is required (config key, --years, or a '# years_of_record=' line)");
  }
  if (cfg.years_of_record && rep.years_from_file) {
    // An explicit setting wins over the file comment.
    c = Catalog(c.storms(), *cfg.years_of_record);
  }
  return c;
}

ModelBundle read_bundle(const RunConfig& cfg) {
  if (!std::filesystem::exists(cfg.bundle)) {
    throw Error(ErrorKind::Io, "bundle '" + cfg.bundle.string() + "' does not exist");
  }
  return load_bundle(cfg.bundle);
}

void write_vec(std::ostream& out, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << num(v[i]);
}

// Storms that never enter `region` are swapped for an empty track so that
// resampled statistics only scan relevant points.
CatalogView restricted_view(const Catalog& c, const Region& region) {
  static const StormTrack empty;
  CatalogView v = CatalogView::of(c);
  for (auto& s : v.storms) {
    const bool enters = std::any_of(s->points().begin(), s->points().end(),
                                    [&](const TrackPoint& p) { return region.contains(p.lon, p.lat); });
    if (!enters) s = &empty;
  }
  return v;
}

template <class F>
std::optional<RiskResult> guarded(F&& f, const std::string& what, std::ostream& err) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UndefinedRegion) throw;
    err << "warning: " << what << ": " << e.what() << '\n';
    return std::nullopt;
  }
}

std::vector<std::vector<double>> per_storm(const Catalog& c, int which) {
  std::vector<std::vector<double>> out;
  for (const auto& s : c.storms()) {
    std::vector<double> v;
    if (which == 0) v = s.speed();
    if (which == 1) v = s.bearing();
    if (which == 2) {
      for (const auto& p : s.points()) v.push_back(p.vorticity);
    }
    if (which == 3) v.push_back(static_cast<double>(s.size()));
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> unwrap(std::vector<double> th) {
  for (std::size_t i = 1; i < th.size(); ++i) th[i] = th[i - 1] + wrap_angle(th[i] - th[i - 1]);
  return th;
}

}  // namespace

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  const Catalog catalog = read_catalog(cfg);
  const ModelBundle b = fit_all(catalog, cfg.fit);
  if (!cfg.bundle.parent_path().empty()) std::filesystem::create_directories(cfg.bundle.parent_path());
  save_bundle(b, cfg.bundle);

  auto rep = open_output(cfg, "fit_report.txt");
  const auto& r = b.report;
  rep << "storms " << r.storms << "\npoints " << r.points << "\nyears_of_record " << num(catalog.years_of_record())
      << "\nstorms_per_year " << num(b.storms_per_year) << "\nmarkov_order k " << b.config.order
      << "\nthreshold u " << num(b.config.threshold) << "\nlaplace_threshold u_L " << num(b.laplace_threshold())
      << "\nactive_cells " << r.active_cells << "\ncells_with_own_kernels " << r.cells_with_own_propagation << '\n';
  rep << "\n[cells] cell lon_center lat_center points genesis bearing speed vorticity\n";
  for (const auto& c : b.cells) {
    const auto ctr = b.grid.center(c.cell);
    rep << c.cell << ' ' << num(ctr.lon) << ' ' << num(ctr.lat) << ' ' << b.grid.counts()[c.cell] << ' '
        << c.genesis_count << ' ' << c.bearing_count << ' ' << c.speed_count << ' ' << c.vorticity_count << '\n';
  }
  if (b.preprocess) {
    const auto& p = *b.preprocess;
    rep << "\n[preprocess]\nlambda " << num(p.lambda) << "\nquadratic " << (p.quadratic ? "yes" : "no")
        << "\nlrt_statistic " << num(p.lrt_statistic) << "\nlrt_p_value " << num(p.lrt_p_value) << "\nmu_coef ";
    write_vec(rep, {p.mu_coef.data(), p.mu_coef.data() + p.mu_coef.size()});
    rep << "\nlog_sigma_coef ";
    write_vec(rep, {p.sigma_coef.data(), p.sigma_coef.data() + p.sigma_coef.size()});
    rep << "\npoints " << p.n << "\nlog_likelihood " << num(p.log_likelihood) << '\n';
  }
  if (b.marginal) {
    const auto& g = b.marginal->gpd();
    rep << "\n[gpd]\npsi " << num(g.scale) << "\nxi " << num(g.shape) << "\nexceed_rate_kernel " << num(g.exceed_rate)
        << "\nexceed_rate_empirical " << num(g.empirical_rate) << "\nexceedances " << g.n_exceed
        << "\nlog_likelihood " << num(g.log_likelihood) << '\n';
    rep << "\n[mrl] threshold mean_excess ci_lo ci_hi n\n";
    for (const auto& m : r.mrl) {
      rep << num(m.threshold) << ' ' << num(m.mean_excess) << ' ' << num(m.ci_lo) << ' ' << num(m.ci_hi) << ' '
          << m.n_exceed << '\n';
    }
  }
  if (b.condex) {
    rep << "\n[conditional_extremes]\nevents " << b.condex->events() << "\nalpha ";
    write_vec(rep, b.condex->alpha);
    rep << "\nbeta ";
    write_vec(rep, b.condex->beta);
    rep << '\n';
  }
  rep << "\n[hazard]\ncovariates";
  for (auto c : b.gam.covariates) rep << ' ' << to_string(c);
  rep << "\nsmoothing ";
  write_vec(rep, b.gam.smoothing);
  rep << "\ngcv " << num(b.gam.gcv) << "\naic " << num(b.gam.aic) << "\nedf " << num(b.gam.edf) << "\ndeviance "
      << num(b.gam.deviance) << "\nrows " << b.gam.n << '\n';
  rep << "\n[warnings]\n";
  for (const auto& w : r.warnings) rep << w << '\n';

  out << "fitted " << r.storms << " storms (" << r.points << " points, " << r.active_cells << " active cells); k="
      << b.config.order << " u=" << num(b.config.threshold) << "; bundle written to " << cfg.bundle.string() << '\n';
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.seed) throw Error(ErrorKind::Argument, "simulate requires a seed (--seed or config simulate.seed)");
  const ModelBundle b = read_bundle(cfg);
  SimulationOptions o;
  o.storms = cfg.storms;
  o.seed = *cfg.seed;
  o.workers = cfg.workers;
  o.max_age = cfg.max_age;
  const SyntheticCatalog s = simulate_catalog(b, o);
  auto f = open_output(cfg, "synthetic.csv");
  write_synthetic_csv(s, f, {"bundle: " + cfg.bundle.string()});
  const auto h = s.cause_histogram();
  out << "simulated " << s.storms.size() << " storms (" << num(s.years_of_record) << " years); termination:";
  for (const auto& [cause, n] : h) out << ' ' << to_string(cause) << '=' << n;
  out << "; tail-chain steps=" << s.stats.tail_chain_steps << " body steps=" << s.stats.body_steps << '\n';
  return kExitOk;
}

int cmd_risk(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Catalog catalog = read_catalog(cfg);
  BootstrapOptions bo;
  bo.replicates = cfg.bootstrap;
  bo.level = cfg.level;
  bo.seed = cfg.seed.value_or(0);
  bo.workers = cfg.workers;

  auto exc = open_output(cfg, "exceedance.csv");
  exc << "region,omega,variant,estimate,ci_lo,ci_hi,numerator,denominator\n";
  auto rp = open_output(cfg, "return_periods.csv");
  rp << "region,omega,return_period_years,ci_lo,ci_hi,exceedances,marker\n";
  auto rl = open_output(cfg, "return_levels.csv");
  rl << "region,r_years,return_level,ci_lo,ci_hi,marker,conditional_exceedance_prob\n";
  std::size_t na_rows = 0;

  for (const auto& [name, region] : cfg.regions) {
    region.validate();
    const CatalogView view = restricted_view(catalog, region);
    for (double omega : cfg.omegas) {
      const auto point = guarded([&] { return exceedance_prob(view, region, omega); }, name, err);
      const auto storm = guarded([&] { return max_exceedance_prob(view, region, omega); }, name, err);
      const auto period = guarded([&] { return return_period(view, region, omega); }, name, err);
      const auto row = [&](const char* variant, std::optional<RiskResult> res, auto stat) {
        exc << name << ',' << num(omega) << ',' << variant << ',';
        if (!res) {
          ++na_rows;
          exc << "NA,NA,NA,NA,NA\n";
          return;
        }
        attach_interval(*res, bootstrap_ci(stat, view, bo));
        exc << num(res->estimate) << ',' << num(res->ci_lo) << ',' << num(res->ci_hi) << ',' << res->numerator << ','
            << res->denominator << '\n';
      };
      row("point", point, [&](const CatalogView& v) -> std::optional<double> {
        return exceedance_prob(v, region, omega).estimate;
      });
      row("storm_max", storm, [&](const CatalogView& v) -> std::optional<double> {
        return max_exceedance_prob(v, region, omega).estimate;
      });
      rp << name << ',' << num(omega) << ',';
      if (!period) {
        ++na_rows;
        rp << "NA,NA,NA,NA,undefined-region\n";
      } else {
        RiskResult res = *period;
        attach_interval(res, bootstrap_ci(
                                 [&](const CatalogView& v) -> std::optional<double> {
                                   const auto r = return_period(v, region, omega);
                                   if (r.marker != RiskMarker::None) return std::nullopt;
                                   return r.estimate;
                                 },
                                 view, bo));
        rp << num(res.estimate) << ',' << num(res.ci_lo) << ',' << num(res.ci_hi) << ',' << res.numerator << ','
           << to_string(res.marker) << '\n';
      }
    }
    for (double r : cfg.return_periods) {
      const auto level = guarded([&] { return return_level(view, region, r); }, name, err);
      rl << name << ',' << num(r) << ',';
      if (!level) {
        ++na_rows;
        rl << "NA,NA,NA,undefined-region,NA\n";
        continue;
      }
      RiskResult res = *level;
      double cond = std::numeric_limits<double>::quiet_NaN();
      if (res.marker == RiskMarker::None) {
        attach_interval(res, bootstrap_ci(
                                 [&](const CatalogView& v) -> std::optional<double> {
                                   const auto x = return_level(v, region, r);
                                   if (x.marker != RiskMarker::None) return std::nullopt;
                                   return x.estimate;
                                 },
                                 view, bo));
        cond = exceedance_prob(view, region, res.estimate).estimate;
      }
      rl << num(res.estimate) << ',' << num(res.ci_lo) << ',' << num(res.ci_hi) << ',' << to_string(res.marker) << ','
         << num(cond) << '\n';
    }
  }

  // Per-cell map on the risk grid.
  const double omega_map = cfg.map_omega.value_or(cfg.omegas.empty() ? 10.0 : cfg.omegas.front());
  const GridSpec grid = GridSpec::global(cfg.map_dlon, cfg.map_dlat);
  std::vector<int> counts(static_cast<std::size_t>(grid.cell_count()), 0), above(counts.size(), 0);
  for (const auto& s : catalog.storms()) {
    for (const auto& p : s.points()) {
      const int f = grid.flat_index(p.position());
      if (f < 0) continue;
      ++counts[f];
      if (p.vorticity > omega_map) ++above[f];
    }
  }
  auto map = open_output(cfg, "risk_map.csv");
  map << "lon_min,lat_min,lon_max,lat_max,omega,points,exceedances,exceedance_prob,return_period_years\n";
  for (int f = 0; f < grid.cell_count(); ++f) {
    if (counts[f] == 0) continue;
    const auto c = grid.unflat(f);
    const double lon0 = grid.lon0() + c.ix * grid.dlon();
    const double lat0 = grid.lat0() + c.iy * grid.dlat();
    const double period = above[f] > 0 ? catalog.years_of_record() / above[f] : std::numeric_limits<double>::infinity();
    map << num(lon0) << ',' << num(lat0) << ',' << num(lon0 + grid.dlon()) << ',' << num(lat0 + grid.dlat()) << ','
        << num(omega_map) << ',' << counts[f] << ',' << above[f] << ','
        << num(static_cast<double>(above[f]) / counts[f]) << ',' << num(period) << '\n';
  }
  out << "risk tables written to " << cfg.output_dir.string() << " (" << cfg.regions.size() << " region(s), "
      << na_rows << " NA row(s))\n";
  return kExitOk;
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Catalog catalog = read_catalog(cfg);
  if (!cfg.simulated.empty() && !std::filesystem::exists(cfg.simulated)) {
    throw Error(ErrorKind::Io, "simulated catalog '" + cfg.simulated.string() + "' does not exist");
  }
  std::size_t tables = 0;

  auto pf = open_output(cfg, "pacf.csv");
  pf << "variable,lag,pacf\n";
  const char* names[] = {"speed", "bearing", "vorticity"};
  for (int v = 0; v < 3; ++v) {
    auto series = per_storm(catalog, v);
    if (v == 1) {
      for (auto& s : series) s = unwrap(std::move(s));
    }
    try {
      const auto p = pacf_pooled(series, cfg.pacf_lags);
      for (std::size_t lag = 0; lag < p.size(); ++lag) pf << names[v] << ',' << lag << ',' << num(p[lag]) << '\n';
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedCorrelation) throw;
      err << "warning: pacf of " << names[v] << ": " << e.what() << '\n';
    }
  }
  ++tables;

  auto dens = open_output(cfg, "density.csv");
  dens << "subset,cell,lon_center,lat_center,density\n";
  const GridSpec grid = GridSpec::global(cfg.fit.grid_dlon, cfg.fit.grid_dlat);
  for (auto subset : {DensitySubset::All, DensitySubset::Genesis, DensitySubset::Lysis}) {
    const auto d = spatial_density(catalog, grid, subset);
    for (int f = 0; f < grid.cell_count(); ++f) {
      if (d[f] <= 0.0) continue;
      const auto c = grid.center(f);
      dens << to_string(subset) << ',' << f << ',' << num(c.lon) << ',' << num(c.lat) << ',' << num(d[f]) << '\n';
    }
  }
  ++tables;

  // Mean residual life of W when a bundle with preprocessing is available,
  // raw vorticity otherwise.
  std::vector<double> data;
  std::string scale = "vorticity";
  if (std::filesystem::exists(cfg.bundle)) {
    const ModelBundle b = load_bundle(cfg.bundle);
    if (b.preprocess) {
      scale = "W";
      for (const auto& s : catalog.storms()) {
        for (std::size_t t = 0; t < s.size(); ++t) {
          const auto& p = s.points()[t];
          if (b.preprocess->window.contains(p.lon, p.lat)) {
            data.push_back(to_residual(p.vorticity, point_covariates(s, t), *b.preprocess));
          }
        }
      }
    }
  }
  if (data.empty()) {
    for (const auto& s : catalog.storms()) {
      for (const auto& p : s.points()) data.push_back(p.vorticity);
    }
  }
  auto mrl = open_output(cfg, "mrl.csv");
  mrl << "scale,threshold,mean_excess,ci_lo,ci_hi,n_exceed\n";
  std::vector<double> thresholds;
  for (int i = 0; i <= 39; ++i) thresholds.push_back(empirical_quantile(data, 0.80 + 0.195 * i / 39.0));
  for (const auto& r : mean_residual_life(data, thresholds)) {
    mrl << scale << ',' << num(r.threshold) << ',' << num(r.mean_excess) << ',' << num(r.ci_lo) << ',' << num(r.ci_hi)
        << ',' << r.n_exceed << '\n';
  }
  ++tables;

  if (!cfg.simulated.empty()) {
    const Catalog sim = load_catalog(cfg.simulated, 1.0);
    auto qq = open_output(cfg, "qq.csv");
    qq << "variable,prob,observed,simulated,lo,hi,inside\n";
    const char* vars[] = {"speed", "bearing", "vorticity", "lifetime"};
    for (int v = 0; v < 4; ++v) {
      QqOptions o;
      o.replicates = cfg.qq_replicates;
      o.level = cfg.level;
      o.seed = cfg.seed.value_or(0) + static_cast<std::uint64_t>(v);
      const auto rows = qq_envelope_grouped(per_storm(catalog, v), per_storm(sim, v), o);
      for (const auto& r : rows) {
        qq << vars[v] << ',' << num(r.prob) << ',' << num(r.observed) << ',' << num(r.simulated) << ',' << num(r.lo)
           << ',' << num(r.hi) << ',' << (r.inside ? 1 : 0) << '\n';
      }
      out << "qq " << vars[v] << ": " << num(100.0 * fraction_inside(rows)) << "% inside\n";
    }
    ++tables;
  }
  out << tables << " diagnostic table(s) written to " << cfg.output_dir.string() << '\n';
  return kExitOk;
}

}  // namespace etcsim::cli
