/**
 * @file engine.hpp
 * @brief Fitting of the full storm model and Monte-Carlo simulation of
 * synthetic storms: genesis -> propagation -> vorticity -> termination.
 */
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "etcsim/catalog.hpp"
#include "etcsim/condex.hpp"
#include "etcsim/evt.hpp"
#include "etcsim/gam.hpp"
#include "etcsim/grid.hpp"
#include "etcsim/kde.hpp"
#include "etcsim/preprocess.hpp"

namespace etcsim {

struct BandwidthScales {
  double genesis_location = 1.0;
  double genesis_condition = 1.0;
  double propagation = 1.0;
  double vorticity = 1.0;
  double marginal = 1.0;   ///< kernel body of the W marginal
  double residual = 1.0;   ///< conditional-extremes residual kernel
};

struct EngineConfig {
  double grid_dlon = 8.0;
  double grid_dlat = 4.0;
  int min_cell_count = 1;     ///< points needed for a cell to be active
  int order = 3;              ///< Markov order k
  int min_cell_tuples = 10;   ///< per-cell kernel needs this many tuples
  BandwidthScales bandwidth;

  bool extremes = true;       ///< preprocessing + GPD tail + tail chains
  double threshold = 1.5;     ///< GPD threshold u on the W scale
  std::optional<double> laplace_threshold;  ///< u_L; default is the Laplace image of u
  PreprocOptions preprocess;
  GpdFitOptions gpd;
  CondExOptions condex;

  std::vector<GamCovariate> hazard_covariates = default_gam_covariates();
  GamOptions gam;
  /// Polygon (lon, lat vertices) where the hazard is active; empty = everywhere.
  std::vector<LonLat> termination_region;

  int max_age = 800;
  int max_propagation_redraws = 10;
  int max_positivity_draws = 100;
  int max_genesis_draws = 100;
};

/// Kernel models of one active cell. Missing models are served by the
/// nearest cell that has them.
struct CellModels {
  int cell = -1;  ///< flat grid index
  std::optional<KdeModel> genesis;      ///< (v0, theta0, omega0)
  std::optional<KdeModel> bearing;      ///< (theta_{j-k..j-1}, theta_j)
  std::optional<KdeModel> speed;        ///< (v_{j-k..j-1}, theta_j, v_j)
  std::optional<KdeModel> vorticity;    ///< (omega_{j-k..j-1}, theta_{j-1}, omega_j)
  int genesis_count = 0;
  int bearing_count = 0;
  int speed_count = 0;
  int vorticity_count = 0;
};

struct FitReport {
  std::size_t storms = 0;
  std::size_t points = 0;
  std::size_t active_cells = 0;
  std::size_t cells_with_own_propagation = 0;
  std::size_t preprocess_points = 0;
  std::size_t w_exceedances = 0;
  std::vector<MrlRow> mrl;
  std::vector<std::string> warnings;
};

struct ModelBundle {
  EngineConfig config;
  GridSpec grid;
  double storms_per_year = 1.0;
  KdeModel genesis_location;
  Eigen::MatrixXd pooled_genesis_bandwidth;  ///< for cells with few genesis tuples
  std::vector<CellModels> cells;             ///< one per active cell, ascending index
  std::optional<PreprocFit> preprocess;
  std::optional<MixtureMarginal> marginal;
  std::optional<CondExFit> condex;
  GamFit gam;
  FitReport report;

  double laplace_threshold() const;
};

/// Fits every submodel. Errors from a submodel propagate unchanged.
ModelBundle fit_all(const Catalog& catalog, const EngineConfig& config = {});

enum class SamplerTag { Genesis, Body, TailChain };
enum class TerminationCause { Hazard, Geographic, MaxAge };

std::string to_string(SamplerTag t);
std::string to_string(TerminationCause c);

struct SyntheticTrack {
  StormTrack track;
  std::uint64_t seed = 0;
  std::vector<SamplerTag> tags;  ///< one per point
  TerminationCause cause = TerminationCause::Hazard;
};

struct SimulationOptions {
  std::size_t storms = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  std::optional<int> max_age;           ///< overrides the bundle config
  std::optional<double> forced_hazard;  ///< constant hazard for t >= 8 (testing)
  int max_attempts_per_storm = 1000;    ///< discarded short storms before giving up
};

struct SimulationStats {
  std::size_t discarded_short = 0;
  std::size_t tail_chain_steps = 0;
  std::size_t body_steps = 0;
  std::size_t tail_chain_fallbacks = 0;
  std::size_t positivity_fallbacks = 0;
};

struct SyntheticCatalog {
  std::vector<SyntheticTrack> storms;
  double years_of_record = 1.0;
  SimulationStats stats;

  Catalog to_catalog() const;
  std::map<TerminationCause, std::size_t> cause_histogram() const;
};

/**
 * Read-only simulator built from a bundle: holds the precomputed conditional
 * samplers and the fallback cell maps. Safe to share across threads.
 */
class Simulator {
 public:
  explicit Simulator(const ModelBundle& bundle);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const ModelBundle& bundle() const noexcept;

  /// One storm from its own stream; the same seed reproduces the same storm.
  SyntheticTrack simulate_storm(std::uint64_t seed, const SimulationOptions& options = {},
                                SimulationStats* stats = nullptr) const;

  /// Genesis draw (x0, v0, theta0, omega0) for diagnostics.
  std::array<double, 5> simulate_genesis(Rng& rng) const;

  SyntheticCatalog simulate_catalog(const SimulationOptions& options) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SyntheticCatalog simulate_catalog(const ModelBundle& bundle, const SimulationOptions& options);

/// Ray-casting point-in-polygon test on lon/lat vertices.
bool point_in_polygon(LonLat p, const std::vector<LonLat>& polygon) noexcept;

}  // namespace etcsim
