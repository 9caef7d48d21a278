#include <ostream>

#include <CLI11.hpp>

#include "etcsim/errors.hpp"
#include "etcsim_cli/cli.hpp"

namespace etcsim::cli {

namespace {

struct Overrides {
  std::string config;
  std::string catalog;
  std::string bundle;
  std::string out;
  std::string simulated;
  std::optional<double> years;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> storms;
  std::optional<int> workers;
  std::optional<double> threshold;
  std::optional<int> order;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "JSON run configuration");
  sub->add_option("--catalog", o.catalog, "observed catalog CSV");
  sub->add_option("--bundle", o.bundle, "fitted model bundle (JSON)");
  sub->add_option("-o,--out", o.out, "output directory");
  sub->add_option("--years", o.years, "years of record of the catalog")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "master random seed");
  sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Overrides& o, bool writes_bundle) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  const std::filesystem::path configured_out = cfg.output_dir;
  if (!o.catalog.empty()) cfg.catalog = o.catalog;
  if (!o.bundle.empty()) cfg.bundle = o.bundle;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.simulated.empty()) cfg.simulated = o.simulated;
  if (o.years) cfg.years_of_record = *o.years;
  if (o.seed) cfg.seed = *o.seed;
  if (o.storms) cfg.storms = *o.storms;
  if (o.workers) cfg.workers = *o.workers;
  if (o.threshold) cfg.fit.threshold = *o.threshold;
  if (o.order) cfg.fit.order = *o.order;
  // fit writes the default bundle next to its outputs; the other commands
  // read it from the configured output directory, whatever --out says.
  if (o.bundle.empty() && cfg.bundle.is_relative() && cfg.bundle == "bundle.json") {
    cfg.bundle = (writes_bundle ? cfg.output_dir : configured_out) / "bundle.json";
  }
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic extratropical cyclone track simulator"};
  app.name("etcsim");
  app.require_subcommand(1);
  Overrides o;

  auto* fit = app.add_subcommand("fit", "fit all model components and write a bundle");
  add_common(fit, o);
  fit->add_option("--threshold", o.threshold, "GPD threshold u on the W scale");
  fit->add_option("--order", o.order, "Markov order k")->check(CLI::Range(1, 10));

  auto* sim = app.add_subcommand("simulate", "simulate a synthetic catalog from a bundle");
  add_common(sim, o);
  sim->add_option("--storms", o.storms, "number of storms")->check(CLI::PositiveNumber);

  auto* risk = app.add_subcommand("risk", "exceedance, return-period and return-level tables");
  add_common(risk, o);

  auto* diag = app.add_subcommand("diagnose", "PACF, density, mean residual life and QQ tables");
  add_common(diag, o);
  diag->add_option("--simulated", o.simulated, "synthetic catalog for QQ comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    const RunConfig cfg = resolve(o, fit->parsed());
    if (fit->parsed()) return cmd_fit(cfg, out);
    if (sim->parsed()) return cmd_simulate(cfg, out);
    if (risk->parsed()) return cmd_risk(cfg, out, err);
    return cmd_diagnose(cfg, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return is_validation_kind(e.kind()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace etcsim::cli
