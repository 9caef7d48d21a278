#include "etcsim/bundle_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "etcsim/errors.hpp"
#include "json.hpp"

namespace etcsim {

using nlohmann::json;

namespace {

// ---- primitives -----------------------------------------------------------

json mat_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd mat_from_json(const json& j) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  const auto& d = j.at("data");
  if (static_cast<Eigen::Index>(d.size()) != r * c) throw Error(ErrorKind::Schema, "matrix size mismatch");
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = d[static_cast<std::size_t>(i * c + k)].get<double>();
  }
  return m;
}

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json kde_to_json(const KdeModel& m) {
  const auto& o = m.options();
  return {{"samples", mat_to_json(m.samples())},
          {"bandwidth", mat_to_json(m.bandwidth())},
          {"structure", o.structure == BandwidthStructure::Diagonal ? "diagonal" : "oriented"},
          {"scale", o.scale},
          {"circular_dims", o.circular_dims},
          {"independent_dims", o.independent_dims}};
}

KdeModel kde_from_json(const json& j) {
  KdeOptions o;
  o.structure = j.at("structure").get<std::string>() == "diagonal" ? BandwidthStructure::Diagonal
                                                                  : BandwidthStructure::Oriented;
  o.scale = j.at("scale").get<double>();
  o.circular_dims = j.at("circular_dims").get<std::vector<int>>();
  o.independent_dims = j.at("independent_dims").get<std::vector<int>>();
  return KdeModel::with_bandwidth(mat_from_json(j.at("samples")), mat_from_json(j.at("bandwidth")), o);
}

json opt_kde(const std::optional<KdeModel>& m) { return m ? kde_to_json(*m) : json(nullptr); }
std::optional<KdeModel> opt_kde(const json& j) {
  if (j.is_null()) return std::nullopt;
  return kde_from_json(j);
}

json gpd_to_json(const GpdFit& g) {
  return {{"threshold", g.threshold},         {"scale", g.scale},
          {"shape", g.shape},                 {"exceed_rate", g.exceed_rate},
          {"empirical_rate", g.empirical_rate}, {"n_exceed", g.n_exceed},
          {"log_likelihood", g.log_likelihood}, {"converged", g.converged}};
}

GpdFit gpd_from_json(const json& j) {
  GpdFit g;
  g.threshold = j.at("threshold").get<double>();
  g.scale = j.at("scale").get<double>();
  g.shape = j.at("shape").get<double>();
  g.exceed_rate = j.at("exceed_rate").get<double>();
  g.empirical_rate = j.at("empirical_rate").get<double>();
  g.n_exceed = j.at("n_exceed").get<int>();
  g.log_likelihood = j.at("log_likelihood").get<double>();
  g.converged = j.at("converged").get<bool>();
  return g;
}

json window_to_json(const Window& w) { return {w.lon_min, w.lon_max, w.lat_min, w.lat_max}; }
Window window_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4 || !(v[0] < v[1]) || !(v[2] < v[3])) {
    throw Error(ErrorKind::Validation, "window must be [lon_min, lon_max, lat_min, lat_max]");
  }
  return {v[0], v[1], v[2], v[3]};
}

json preproc_to_json(const PreprocFit& p) {
  return {{"lambda", p.lambda},
          {"quadratic", p.quadratic},
          {"mu_coef", vec_to_json(p.mu_coef)},
          {"sigma_coef", vec_to_json(p.sigma_coef)},
          {"center", p.center},
          {"scale", p.scale},
          {"window", window_to_json(p.window)},
          {"log_likelihood", p.log_likelihood},
          {"n", p.n},
          {"lrt_statistic", p.lrt_statistic},
          {"lrt_p_value", p.lrt_p_value}};
}

PreprocFit preproc_from_json(const json& j) {
  PreprocFit p;
  p.lambda = j.at("lambda").get<double>();
  p.quadratic = j.at("quadratic").get<bool>();
  p.mu_coef = vec_from_json(j.at("mu_coef"));
  p.sigma_coef = vec_from_json(j.at("sigma_coef"));
  p.center = j.at("center").get<std::vector<double>>();
  p.scale = j.at("scale").get<std::vector<double>>();
  p.window = window_from_json(j.at("window"));
  p.log_likelihood = j.at("log_likelihood").get<double>();
  p.n = j.at("n").get<std::size_t>();
  p.lrt_statistic = j.at("lrt_statistic").get<double>();
  p.lrt_p_value = j.at("lrt_p_value").get<double>();
  return p;
}

json condex_to_json(const CondExFit& c) {
  return {{"order", c.order},
          {"threshold", c.threshold},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"boundary", c.boundary},
          {"residuals", mat_to_json(c.residuals)},
          {"bandwidth_scale", c.bandwidth_scale},
          {"warnings", c.warnings}};
}

CondExFit condex_from_json(const json& j) {
  CondExFit c;
  c.order = j.at("order").get<int>();
  c.threshold = j.at("threshold").get<double>();
  c.alpha = j.at("alpha").get<std::vector<double>>();
  c.beta = j.at("beta").get<std::vector<double>>();
  c.boundary = j.at("boundary").get<std::vector<bool>>();
  c.residuals = mat_from_json(j.at("residuals"));
  c.bandwidth_scale = j.at("bandwidth_scale").get<double>();
  c.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (static_cast<int>(c.alpha.size()) != c.order || static_cast<int>(c.beta.size()) != c.order ||
      c.residuals.cols() != c.order) {
    throw Error(ErrorKind::Schema, "conditional-extremes block has inconsistent order");
  }
  rebuild_residual_kde(c);
  return c;
}

json gam_to_json(const GamFit& g) {
  json covs = json::array(), bases = json::array(), coefs = json::array();
  for (auto c : g.covariates) covs.push_back(to_string(c));
  for (const auto& b : g.bases) bases.push_back({{"knots", b.knots()}, {"degree", b.degree()}});
  for (const auto& c : g.smooth_coef) coefs.push_back(vec_to_json(c));
  return {{"covariates", covs}, {"bases", bases}, {"intercept", g.intercept},
          {"smooth_coef", coefs}, {"smoothing", g.smoothing}, {"min_age", g.min_age},
          {"gcv", g.gcv}, {"deviance", g.deviance}, {"edf", g.edf}, {"aic", g.aic},
          {"n", g.n}, {"iterations", g.iterations}};
}

GamFit gam_from_json(const json& j) {
  GamFit g;
  for (const auto& c : j.at("covariates")) g.covariates.push_back(gam_covariate_from_string(c.get<std::string>()));
  for (const auto& b : j.at("bases")) {
    g.bases.emplace_back(b.at("knots").get<std::vector<double>>(), b.at("degree").get<int>());
  }
  g.intercept = j.at("intercept").get<double>();
  for (const auto& c : j.at("smooth_coef")) g.smooth_coef.push_back(vec_from_json(c));
  g.smoothing = j.at("smoothing").get<std::vector<double>>();
  g.min_age = j.at("min_age").get<int>();
  g.gcv = j.at("gcv").get<double>();
  g.deviance = j.at("deviance").get<double>();
  g.edf = j.at("edf").get<double>();
  g.aic = j.at("aic").get<double>();
  g.n = j.at("n").get<std::size_t>();
  g.iterations = j.at("iterations").get<int>();
  if (g.bases.size() != g.covariates.size() || g.smooth_coef.size() != g.covariates.size()) {
    throw Error(ErrorKind::Schema, "hazard block has inconsistent smooth counts");
  }
  for (std::size_t k = 0; k < g.bases.size(); ++k) {
    if (g.smooth_coef[k].size() != g.bases[k].size()) {
      throw Error(ErrorKind::Schema, "hazard smooth coefficients do not match the basis");
    }
  }
  return g;
}

// ---- configuration --------------------------------------------------------

std::string quad_name(QuadraticTerms q) {
  switch (q) {
    case QuadraticTerms::Never: return "never";
    case QuadraticTerms::Always: return "always";
    default: return "auto";
  }
}

QuadraticTerms quad_from(const std::string& s) {
  if (s == "auto") return QuadraticTerms::Auto;
  if (s == "never") return QuadraticTerms::Never;
  if (s == "always") return QuadraticTerms::Always;
  throw Error(ErrorKind::Validation, "preprocess.quadratic must be auto, never or always");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Validation, "config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::Validation, "config: unknown key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json config_to_json(const EngineConfig& c) {
  json region = json::array();
  for (const auto& p : c.termination_region) region.push_back({p.lon, p.lat});
  json covs = json::array();
  for (auto v : c.hazard_covariates) covs.push_back(to_string(v));
  return {
      {"grid", {{"dlon", c.grid_dlon}, {"dlat", c.grid_dlat}, {"min_count", c.min_cell_count}}},
      {"order", c.order},
      {"min_cell_tuples", c.min_cell_tuples},
      {"bandwidth",
       {{"genesis_location", c.bandwidth.genesis_location},
        {"genesis_condition", c.bandwidth.genesis_condition},
        {"propagation", c.bandwidth.propagation},
        {"vorticity", c.bandwidth.vorticity},
        {"marginal", c.bandwidth.marginal},
        {"residual", c.bandwidth.residual}}},
      {"extremes", c.extremes},
      {"threshold", c.threshold},
      {"laplace_threshold", c.laplace_threshold ? json(*c.laplace_threshold) : json(nullptr)},
      {"preprocess",
       {{"window", window_to_json(c.preprocess.window)},
        {"quadratic", quad_name(c.preprocess.quadratic)},
        {"lrt_level", c.preprocess.lrt_level},
        {"min_points", c.preprocess.min_points},
        {"lambda_range", {c.preprocess.lambda_lo, c.preprocess.lambda_hi}}}},
      {"gpd",
       {{"restarts", c.gpd.restarts},
        {"tolerance", c.gpd.tolerance},
        {"seed", c.gpd.seed},
        {"resolution", c.gpd.resolution},
        {"min_exceedances", c.gpd.min_exceedances}}},
      {"condex", {{"min_events", c.condex.min_events}}},
      {"hazard",
       {{"covariates", covs},
        {"interior_knots", c.gam.interior_knots},
        {"grid_points", c.gam.grid_points},
        {"lambda_range", {c.gam.lambda_lo, c.gam.lambda_hi}},
        {"sweeps", c.gam.sweeps},
        {"separation_limit", c.gam.separation_limit},
        {"max_iterations", c.gam.max_iterations},
        {"fixed_lambda", c.gam.fixed_lambda}}},
      {"termination_region", region},
      {"max_age", c.max_age},
      {"max_propagation_redraws", c.max_propagation_redraws},
      {"max_positivity_draws", c.max_positivity_draws},
      {"max_genesis_draws", c.max_genesis_draws}};
}

void validate(const EngineConfig& c) {
  const auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::Validation, std::string("config: ") + what + " must be positive");
  };
  positive(c.grid_dlon, "grid.dlon");
  positive(c.grid_dlat, "grid.dlat");
  positive(c.bandwidth.genesis_location, "bandwidth.genesis_location");
  positive(c.bandwidth.genesis_condition, "bandwidth.genesis_condition");
  positive(c.bandwidth.propagation, "bandwidth.propagation");
  positive(c.bandwidth.vorticity, "bandwidth.vorticity");
  positive(c.bandwidth.marginal, "bandwidth.marginal");
  positive(c.bandwidth.residual, "bandwidth.residual");
  if (!std::isfinite(c.threshold)) throw Error(ErrorKind::Validation, "config: threshold must be finite");
  if (c.laplace_threshold && !std::isfinite(*c.laplace_threshold)) {
    throw Error(ErrorKind::Validation, "config: laplace_threshold must be finite");
  }
  if (c.order < 1) throw Error(ErrorKind::Validation, "config: order must be >= 1");
  if (c.min_cell_tuples < 2) throw Error(ErrorKind::Validation, "config: min_cell_tuples must be >= 2");
  if (c.max_age < static_cast<int>(kMinTrackPoints)) throw Error(ErrorKind::Validation, "config: max_age must be >= 8");
  if (!c.termination_region.empty() && c.termination_region.size() < 3) {
    throw Error(ErrorKind::Validation, "config: termination_region needs at least three vertices");
  }
}

EngineConfig config_from_json(const json& j, EngineConfig c) {
  check_keys(j, {"grid", "order", "min_cell_tuples", "bandwidth", "extremes", "threshold",
                 "laplace_threshold", "preprocess", "gpd", "condex", "hazard", "termination_region",
                 "max_age", "max_propagation_redraws", "max_positivity_draws", "max_genesis_draws"},
             "fit");
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, {"dlon", "dlat", "min_count"}, "grid");
    read(g, "dlon", c.grid_dlon);
    read(g, "dlat", c.grid_dlat);
    read(g, "min_count", c.min_cell_count);
  }
  read(j, "order", c.order);
  read(j, "min_cell_tuples", c.min_cell_tuples);
  if (j.contains("bandwidth")) {
    const auto& b = j["bandwidth"];
    check_keys(b, {"genesis_location", "genesis_condition", "propagation", "vorticity", "marginal", "residual"},
               "bandwidth");
    read(b, "genesis_location", c.bandwidth.genesis_location);
    read(b, "genesis_condition", c.bandwidth.genesis_condition);
    read(b, "propagation", c.bandwidth.propagation);
    read(b, "vorticity", c.bandwidth.vorticity);
    read(b, "marginal", c.bandwidth.marginal);
    read(b, "residual", c.bandwidth.residual);
  }
  read(j, "extremes", c.extremes);
  read(j, "threshold", c.threshold);
  if (j.contains("laplace_threshold")) {
    if (j["laplace_threshold"].is_null()) {
      c.laplace_threshold.reset();
    } else {
      c.laplace_threshold = j["laplace_threshold"].get<double>();
    }
  }
  if (j.contains("preprocess")) {
    const auto& p = j["preprocess"];
    check_keys(p, {"window", "quadratic", "lrt_level", "min_points", "lambda_range"}, "preprocess");
    if (p.contains("window")) c.preprocess.window = window_from_json(p["window"]);
    if (p.contains("quadratic")) c.preprocess.quadratic = quad_from(p["quadratic"].get<std::string>());
    read(p, "lrt_level", c.preprocess.lrt_level);
    read(p, "min_points", c.preprocess.min_points);
    if (p.contains("lambda_range")) {
      const auto r = p["lambda_range"].get<std::vector<double>>();
      if (r.size() != 2 || !(r[0] < r[1])) throw Error(ErrorKind::Validation, "preprocess.lambda_range must be [lo, hi]");
      c.preprocess.lambda_lo = r[0];
      c.preprocess.lambda_hi = r[1];
    }
  }
  if (j.contains("gpd")) {
    const auto& g = j["gpd"];
    check_keys(g, {"restarts", "tolerance", "seed", "resolution", "min_exceedances"}, "gpd");
    read(g, "restarts", c.gpd.restarts);
    read(g, "tolerance", c.gpd.tolerance);
    read(g, "seed", c.gpd.seed);
    read(g, "resolution", c.gpd.resolution);
    read(g, "min_exceedances", c.gpd.min_exceedances);
  }
  if (j.contains("condex")) {
    check_keys(j["condex"], {"min_events"}, "condex");
    read(j["condex"], "min_events", c.condex.min_events);
  }
  if (j.contains("hazard")) {
    const auto& h = j["hazard"];
    check_keys(h, {"covariates", "interior_knots", "grid_points", "lambda_range", "sweeps",
                   "separation_limit", "max_iterations", "fixed_lambda"},
               "hazard");
    if (h.contains("covariates")) {
      c.hazard_covariates.clear();
      for (const auto& v : h["covariates"]) c.hazard_covariates.push_back(gam_covariate_from_string(v.get<std::string>()));
    }
    read(h, "interior_knots", c.gam.interior_knots);
    read(h, "grid_points", c.gam.grid_points);
    if (h.contains("lambda_range")) {
      const auto r = h["lambda_range"].get<std::vector<double>>();
      if (r.size() != 2 || !(r[0] > 0.0 && r[0] < r[1])) throw Error(ErrorKind::Validation, "hazard.lambda_range must be [lo, hi] > 0");
      c.gam.lambda_lo = r[0];
      c.gam.lambda_hi = r[1];
    }
    read(h, "sweeps", c.gam.sweeps);
    read(h, "separation_limit", c.gam.separation_limit);
    read(h, "max_iterations", c.gam.max_iterations);
    read(h, "fixed_lambda", c.gam.fixed_lambda);
  }
  if (j.contains("termination_region")) {
    c.termination_region.clear();
    for (const auto& v : j["termination_region"]) {
      const auto p = v.get<std::vector<double>>();
      if (p.size() != 2) throw Error(ErrorKind::Validation, "termination_region vertices are [lon, lat]");
      c.termination_region.push_back({p[0], p[1]});
    }
  }
  read(j, "max_age", c.max_age);
  read(j, "max_propagation_redraws", c.max_propagation_redraws);
  read(j, "max_positivity_draws", c.max_positivity_draws);
  read(j, "max_genesis_draws", c.max_genesis_draws);
  validate(c);
  return c;
}

json report_to_json(const FitReport& r) {
  json mrl = json::array();
  for (const auto& m : r.mrl) mrl.push_back({m.threshold, m.mean_excess, m.ci_lo, m.ci_hi, m.n_exceed});
  return {{"storms", r.storms},
          {"points", r.points},
          {"active_cells", r.active_cells},
          {"cells_with_own_propagation", r.cells_with_own_propagation},
          {"preprocess_points", r.preprocess_points},
          {"w_exceedances", r.w_exceedances},
          {"mrl", mrl},
          {"warnings", r.warnings}};
}

FitReport report_from_json(const json& j) {
  FitReport r;
  r.storms = j.at("storms").get<std::size_t>();
  r.points = j.at("points").get<std::size_t>();
  r.active_cells = j.at("active_cells").get<std::size_t>();
  r.cells_with_own_propagation = j.at("cells_with_own_propagation").get<std::size_t>();
  r.preprocess_points = j.at("preprocess_points").get<std::size_t>();
  r.w_exceedances = j.at("w_exceedances").get<std::size_t>();
  for (const auto& m : j.at("mrl")) {
    MrlRow row;
    row.threshold = m.at(0).get<double>();
    row.mean_excess = m.at(1).get<double>();
    row.ci_lo = m.at(2).get<double>();
    row.ci_hi = m.at(3).get<double>();
    row.n_exceed = m.at(4).get<int>();
    r.mrl.push_back(row);
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

void write_number(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

void write_point_row(std::ostream& out, const std::string& id, const TrackPoint& p) {
  out << id << ',' << p.time_index << ',';
  write_number(out, p.lon);
  out << ',';
  write_number(out, p.lat);
  out << ',';
  write_number(out, p.vorticity);
}

}  // namespace

std::string bundle_to_json(const ModelBundle& b) {
  json cells = json::array();
  for (const auto& c : b.cells) {
    cells.push_back({{"cell", c.cell},
                     {"genesis", opt_kde(c.genesis)},
                     {"bearing", opt_kde(c.bearing)},
                     {"speed", opt_kde(c.speed)},
                     {"vorticity", opt_kde(c.vorticity)},
                     {"counts", {c.genesis_count, c.bearing_count, c.speed_count, c.vorticity_count}}});
  }
  json j = {
      {"schema", kBundleSchema},
      {"version", kBundleVersion},
      {"config", config_to_json(b.config)},
      {"grid",
       {{"lon0", b.grid.lon0()}, {"lat0", b.grid.lat0()}, {"dlon", b.grid.dlon()}, {"dlat", b.grid.dlat()},
        {"nlon", b.grid.nlon()}, {"nlat", b.grid.nlat()}, {"counts", b.grid.counts()}}},
      {"storms_per_year", b.storms_per_year},
      {"genesis_location", kde_to_json(b.genesis_location)},
      {"pooled_genesis_bandwidth", mat_to_json(b.pooled_genesis_bandwidth)},
      {"cells", cells},
      {"preprocess", b.preprocess ? preproc_to_json(*b.preprocess) : json(nullptr)},
      {"marginal", b.marginal ? json{{"body", kde_to_json(b.marginal->body().model())},
                                     {"gpd", gpd_to_json(b.marginal->gpd())}}
                              : json(nullptr)},
      {"condex", b.condex ? condex_to_json(*b.condex) : json(nullptr)},
      {"hazard", gam_to_json(b.gam)},
      {"report", report_to_json(b.report)}};
  return j.dump(1);
}

ModelBundle bundle_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("bundle is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("schema", std::string()) != kBundleSchema) {
      throw Error(ErrorKind::Schema, "document is not a model bundle");
    }
    const int version = j.at("version").get<int>();
    if (version != kBundleVersion) {
      throw Error(ErrorKind::Schema, "bundle schema version " + std::to_string(version) +
                                         " is not supported (expected " + std::to_string(kBundleVersion) + ")");
    }
    ModelBundle b;
    b.config = config_from_json(j.at("config"), EngineConfig{});
    const auto& g = j.at("grid");
    b.grid = GridSpec(g.at("lon0").get<double>(), g.at("lat0").get<double>(), g.at("dlon").get<double>(),
                      g.at("dlat").get<double>(), g.at("nlon").get<int>(), g.at("nlat").get<int>());
    b.grid.set_counts(g.at("counts").get<std::vector<int>>(), b.config.min_cell_count);
    b.storms_per_year = j.at("storms_per_year").get<double>();
    b.genesis_location = kde_from_json(j.at("genesis_location"));
    b.pooled_genesis_bandwidth = mat_from_json(j.at("pooled_genesis_bandwidth"));
    for (const auto& c : j.at("cells")) {
      CellModels m;
      m.cell = c.at("cell").get<int>();
      m.genesis = opt_kde(c.at("genesis"));
      m.bearing = opt_kde(c.at("bearing"));
      m.speed = opt_kde(c.at("speed"));
      m.vorticity = opt_kde(c.at("vorticity"));
      const auto counts = c.at("counts").get<std::vector<int>>();
      if (counts.size() != 4) throw Error(ErrorKind::Schema, "cell counts must have four entries");
      m.genesis_count = counts[0];
      m.bearing_count = counts[1];
      m.speed_count = counts[2];
      m.vorticity_count = counts[3];
      b.cells.push_back(std::move(m));
    }
    if (!j.at("preprocess").is_null()) b.preprocess = preproc_from_json(j["preprocess"]);
    if (!j.at("marginal").is_null()) {
      b.marginal = MixtureMarginal(KernelCdf(kde_from_json(j["marginal"].at("body"))),
                                   gpd_from_json(j["marginal"].at("gpd")));
    }
    if (!j.at("condex").is_null()) b.condex = condex_from_json(j["condex"]);
    b.gam = gam_from_json(j.at("hazard"));
    b.report = report_from_json(j.at("report"));
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed bundle: ") + e.what());
  }
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write bundle '" + path.string() + "'");
  out << bundle_to_json(bundle) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing bundle '" + path.string() + "'");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open bundle '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return bundle_from_json(ss.str());
}

std::string engine_config_to_json(const EngineConfig& config) { return config_to_json(config).dump(2); }

EngineConfig engine_config_from_json(const std::string& text, EngineConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_from_json(j, std::move(base));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("config: ") + e.what());
  }
}

void write_catalog_csv(const Catalog& catalog, std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "# years_of_record=";
  write_number(out, catalog.years_of_record());
  out << "\nstorm_id,time_index,lon,lat,vorticity\n";
  for (const auto& s : catalog.storms()) {
    for (const auto& p : s.points()) {
      write_point_row(out, s.id(), p);
      out << '\n';
    }
  }
}

void write_synthetic_csv(const SyntheticCatalog& catalog, std::ostream& out,
                         const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "# years_of_record=";
  write_number(out, catalog.years_of_record);
  out << "\nstorm_id,time_index,lon,lat,vorticity,seed,sampler_tag,termination_cause\n";
  for (const auto& s : catalog.storms) {
    const auto& pts = s.track.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      write_point_row(out, s.track.id(), pts[i]);
      out << ',' << s.seed << ',' << to_string(s.tags[i]) << ',' << to_string(s.cause) << '\n';
    }
  }
}

}  // namespace etcsim
