// Command-line front end: fit, simulate, risk and diagnose.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "etcsim/engine.hpp"
#include "etcsim/risk.hpp"

namespace etcsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

struct NamedRegion {
  std::string name;
  Region region;
};

struct RunConfig {
  std::filesystem::path catalog;
  std::optional<double> years_of_record;
  std::filesystem::path bundle = "bundle.json";
  std::filesystem::path output_dir = ".";
  std::filesystem::path simulated;  ///< diagnose: synthetic catalog for QQ tables

  EngineConfig fit;

  std::size_t storms = 1000;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::optional<int> max_age;

  std::vector<NamedRegion> regions{{"uk", Region{}}};
  std::vector<double> return_periods{1, 2, 5, 10, 20, 50, 100};
  std::vector<double> omegas{8, 9, 10, 11, 12, 13, 14, 15};
  int bootstrap = 200;
  double level = 0.95;
  double map_dlon = 4.0;
  double map_dlat = 3.0;
  std::optional<double> map_omega;

  int pacf_lags = 10;
  int qq_replicates = 200;

  /// Compact JSON echo of the effective configuration.
  std::string echo() const;
};

/// Parses a JSON config document; unknown keys are a validation error.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

int cmd_fit(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_risk(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_diagnose(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Full entry point: parses arguments, runs the command and maps errors to
/// exit codes (0 ok, 2 validation, 3 fit/runtime).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace etcsim::cli
