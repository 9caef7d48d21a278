#include <algorithm>
#include <cmath>
#include <limits>

#include "engine_internal.hpp"
#include "etcsim/errors.hpp"
#include "etcsim/geometry.hpp"

namespace etcsim {

namespace detail {

KdeOptions genesis_options(double scale) {
  KdeOptions o;
  o.scale = scale;
  o.circular_dims = {1};
  o.independent_dims = {1};
  return o;
}

KdeOptions bearing_options(int order, double scale) {
  KdeOptions o;
  o.scale = scale;
  o.circular_dims.push_back(order - 1);
  for (int i = 0; i <= order; ++i) {
    if (i != order - 1) o.circular_dims.push_back(i);
  }
  return o;
}

KdeOptions speed_options(int order, double scale) {
  KdeOptions o;
  o.scale = scale;
  o.circular_dims = {order};
  o.independent_dims = {order};
  return o;
}

KdeOptions vorticity_options(int order, double scale) { return speed_options(order, scale); }

std::vector<double> unwrap_relative(const std::vector<double>& theta) {
  std::vector<double> out(theta.size());
  if (theta.empty()) return out;
  const double anchor = wrap_angle(theta.back());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = anchor + wrap_angle(theta[i] - anchor);
  out.back() = anchor;
  return out;
}

std::vector<int> nearest_source(const GridSpec& grid, const std::vector<int>& active,
                                const std::vector<char>& has_model) {
  std::vector<int> src(active.size(), -1);
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (has_model[i]) {
      src[i] = static_cast<int>(i);
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    const LonLat c = grid.center(active[i]);
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (!has_model[j]) continue;
      const double d = great_circle_distance(c, grid.center(active[j]));
      if (d < best) {
        best = d;
        src[i] = static_cast<int>(j);
      }
    }
  }
  return src;
}

}  // namespace detail

namespace {

using Rows = std::vector<std::vector<double>>;

Eigen::MatrixXd to_matrix(const Rows& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::optional<KdeModel> try_fit(const Rows& rows, const KdeOptions& opt, std::size_t min_rows,
                                std::vector<std::string>& warnings, const std::string& what) {
  if (rows.size() < std::max<std::size_t>(min_rows, 2)) return std::nullopt;
  try {
    return KdeModel::fit(to_matrix(rows), opt);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularBandwidth) throw;
    warnings.push_back(what + ": singular bandwidth, using a neighbouring cell");
    return std::nullopt;
  }
}

}  // namespace

double ModelBundle::laplace_threshold() const {
  if (config.laplace_threshold) return *config.laplace_threshold;
  if (!marginal) return std::numeric_limits<double>::infinity();
  return -std::log(2.0 * marginal->gpd().exceed_rate);
}

ModelBundle fit_all(const Catalog& catalog, const EngineConfig& config) {
  if (config.order < 1) throw Error(ErrorKind::Argument, "Markov order must be >= 1");
  if (config.min_cell_tuples < 2) throw Error(ErrorKind::Argument, "min_cell_tuples must be >= 2");
  ModelBundle b;
  b.config = config;
  b.storms_per_year = catalog.storms_per_year();
  b.grid = grid_from_catalog(catalog, GridSpec::global(config.grid_dlon, config.grid_dlat),
                             config.min_cell_count);
  auto& report = b.report;
  report.storms = catalog.storms().size();
  report.points = catalog.point_count();
  const auto& active = b.grid.active_cells();
  report.active_cells = active.size();
  std::vector<int> pos_of(static_cast<std::size_t>(b.grid.cell_count()), -1);
  for (std::size_t i = 0; i < active.size(); ++i) pos_of[active[i]] = static_cast<int>(i);

  const int k = config.order;
  Rows genesis_locations, genesis_all;
  std::vector<Rows> gen(active.size()), brg(active.size()), spd(active.size()), vor(active.size());
  for (const auto& s : catalog.storms()) {
    const auto& p = s.points();
    const auto& v = s.speed();
    const auto& th = s.bearing();
    const auto cell_pos = [&](std::size_t t) {
      const int pos = pos_of[b.grid.flat_index(p[t].position())];
      if (pos < 0) throw Error(ErrorKind::Validation, "catalog point outside the active grid");
      return static_cast<std::size_t>(pos);
    };
    genesis_locations.push_back({p[0].lon, p[0].lat});
    std::vector<double> g0{v[0], th[0], p[0].vorticity};
    genesis_all.push_back(g0);
    gen[cell_pos(0)].push_back(std::move(g0));
    const auto ku = static_cast<std::size_t>(k);
    for (std::size_t j = ku; j + 1 < p.size(); ++j) {
      std::vector<double> t(th.begin() + static_cast<long>(j - ku), th.begin() + static_cast<long>(j));
      t.push_back(th[j]);
      // Unwrap relative to theta_{j-1} (the anchor); theta_j rides along.
      const double anchor = th[j - 1];
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i != ku - 1) t[i] = anchor + wrap_angle(t[i] - anchor);
      }
      brg[cell_pos(j)].push_back(std::move(t));
      std::vector<double> sv(v.begin() + static_cast<long>(j - ku), v.begin() + static_cast<long>(j));
      sv.push_back(th[j]);
      sv.push_back(v[j]);
      spd[cell_pos(j)].push_back(std::move(sv));
    }
    for (std::size_t j = ku; j < p.size(); ++j) {
      std::vector<double> w;
      for (std::size_t i = j - ku; i < j; ++i) w.push_back(p[i].vorticity);
      w.push_back(th[j - 1]);
      w.push_back(p[j].vorticity);
      vor[cell_pos(j)].push_back(std::move(w));
    }
  }

  KdeOptions loc_opt;
  loc_opt.scale = config.bandwidth.genesis_location;
  b.genesis_location = KdeModel::fit(to_matrix(genesis_locations), loc_opt);
  const KdeOptions gopt = detail::genesis_options(config.bandwidth.genesis_condition);
  b.pooled_genesis_bandwidth = scott_bandwidth(to_matrix(genesis_all), gopt);

  const auto tuples = static_cast<std::size_t>(config.min_cell_tuples);
  for (std::size_t i = 0; i < active.size(); ++i) {
    CellModels c;
    c.cell = active[i];
    c.genesis_count = static_cast<int>(gen[i].size());
    c.bearing_count = static_cast<int>(brg[i].size());
    c.speed_count = static_cast<int>(spd[i].size());
    c.vorticity_count = static_cast<int>(vor[i].size());
    const std::string where = "cell " + std::to_string(c.cell);
    if (gen[i].size() >= tuples) {
      c.genesis = try_fit(gen[i], gopt, tuples, report.warnings, where + " genesis");
    }
    if (!c.genesis && !gen[i].empty()) {
      c.genesis = KdeModel::with_bandwidth(to_matrix(gen[i]), b.pooled_genesis_bandwidth, gopt);
    }
    c.bearing = try_fit(brg[i], detail::bearing_options(k, config.bandwidth.propagation), tuples,
                        report.warnings, where + " bearing");
    c.speed = try_fit(spd[i], detail::speed_options(k, config.bandwidth.propagation), tuples,
                      report.warnings, where + " speed");
    c.vorticity = try_fit(vor[i], detail::vorticity_options(k, config.bandwidth.vorticity), tuples,
                          report.warnings, where + " vorticity");
    if (c.bearing && c.speed && c.vorticity) ++report.cells_with_own_propagation;
    b.cells.push_back(std::move(c));
  }
  const auto any = [&](auto member) {
    return std::any_of(b.cells.begin(), b.cells.end(), [&](const CellModels& c) { return (c.*member).has_value(); });
  };
  if (!any(&CellModels::bearing) || !any(&CellModels::speed) || !any(&CellModels::vorticity)) {
    throw Error(ErrorKind::Validation, "no grid cell has " + std::to_string(config.min_cell_tuples) +
                                           " propagation/vorticity tuples; catalog too small");
  }

  if (config.extremes) {
    b.preprocess = fit_preprocess(catalog, config.preprocess);
    const auto& pp = *b.preprocess;
    std::vector<double> w_all;
    std::vector<std::vector<double>> segments;
    for (const auto& s : catalog.storms()) {
      std::vector<double> seg;
      for (std::size_t t = 0; t < s.size(); ++t) {
        const auto& p = s.points()[t];
        if (pp.window.contains(p.lon, p.lat)) {
          const double w = to_residual(p.vorticity, point_covariates(s, t), pp);
          seg.push_back(w);
          w_all.push_back(w);
        } else if (!seg.empty()) {
          segments.push_back(std::move(seg));
          seg.clear();
        }
      }
      if (!seg.empty()) segments.push_back(std::move(seg));
    }
    report.preprocess_points = w_all.size();
    const KernelCdf body = KernelCdf::fit(w_all, config.bandwidth.marginal);
    const GpdFit gpd = fit_gpd(w_all, config.threshold, body, config.gpd);
    report.w_exceedances = static_cast<std::size_t>(gpd.n_exceed);
    b.marginal = MixtureMarginal(body, gpd);

    std::vector<double> grid;
    for (int i = 0; i <= 30; ++i) grid.push_back(empirical_quantile(w_all, 0.80 + 0.19 * i / 30.0));
    report.mrl = mean_residual_life(w_all, grid);

    for (auto& seg : segments) {
      for (double& w : seg) w = b.marginal->to_laplace(w);
    }
    CondExOptions copt = config.condex;
    copt.bandwidth_scale = config.bandwidth.residual;
    b.condex = fit_condex(segments, k, b.laplace_threshold(), copt);
    for (const auto& msg : b.condex->warnings) report.warnings.push_back(msg);
  }

  const GamData data = build_gam_data(catalog, config.hazard_covariates);
  for (const auto& msg : data.warnings) report.warnings.push_back(msg);
  b.gam = fit_gam(data, config.gam);
  return b;
}

}  // namespace etcsim
