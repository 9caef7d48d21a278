/**
 * @file risk.hpp
 * @brief Risk analytics on storm catalogs: exceedance probabilities, return
 * periods and levels, spatial densities, storm-level bootstrap intervals and
 * QQ tolerance envelopes.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etcsim/catalog.hpp"
#include "etcsim/grid.hpp"

namespace etcsim {

/// Half-open box [lon_min, lon_max) x [lat_min, lat_max). The default is the
/// UK/North Sea box used for the headline risk figures.
struct Region {
  double lon_min = -11.0;
  double lon_max = 2.0;
  double lat_min = 50.0;
  double lat_max = 60.0;

  bool contains(double lon, double lat) const noexcept {
    return lon >= lon_min && lon < lon_max && lat >= lat_min && lat < lat_max;
  }
  void validate() const;
};

/// Non-owning list of storms with a record length; resampling builds these
/// without copying tracks.
struct CatalogView {
  std::vector<const StormTrack*> storms;
  double years_of_record = 1.0;

  static CatalogView of(const Catalog& catalog);
};

enum class RiskMarker { None, Infinite, ExtrapolationUnsupported, BelowRange };
std::string to_string(RiskMarker m);

struct RiskResult {
  double estimate = 0.0;
  double ci_lo = std::numeric_limits<double>::quiet_NaN();
  double ci_hi = std::numeric_limits<double>::quiet_NaN();
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  RiskMarker marker = RiskMarker::None;
};

/// Share of in-region points whose vorticity exceeds `omega`.
RiskResult exceedance_prob(const CatalogView& view, const Region& region, double omega);
RiskResult exceedance_prob(const Catalog& catalog, const Region& region, double omega);

/// Share of storms entering the region whose in-region maximum exceeds `omega`.
RiskResult max_exceedance_prob(const CatalogView& view, const Region& region, double omega);
RiskResult max_exceedance_prob(const Catalog& catalog, const Region& region, double omega);

/// years / (# in-region exceedances); Infinite marker when there are none.
RiskResult return_period(const CatalogView& view, const Region& region, double omega);
RiskResult return_period(const Catalog& catalog, const Region& region, double omega);

/// Level exceeded on average once every r years: with m = years / r and
/// j = round(m), the (j+1)-th largest in-region value.
RiskResult return_level(const CatalogView& view, const Region& region, double r_years);
RiskResult return_level(const Catalog& catalog, const Region& region, double r_years);

enum class DensitySubset { All, Genesis, Lysis };
DensitySubset density_subset_from_string(const std::string& s);
std::string to_string(DensitySubset s);

/// Per-cell share of points (all / first / last) over the whole grid; sums
/// to one. `area_weighted` divides counts by cos(latitude of the cell centre)
/// before normalising.
std::vector<double> spatial_density(const CatalogView& view, const GridSpec& grid,
                                    DensitySubset subset = DensitySubset::All,
                                    bool area_weighted = false);
std::vector<double> spatial_density(const Catalog& catalog, const GridSpec& grid,
                                    DensitySubset subset = DensitySubset::All,
                                    bool area_weighted = false);

/// Statistic of a catalog; nullopt (or an UndefinedRegion error) means
/// undefined on this resample.
using CatalogStatistic = std::function<std::optional<double>(const CatalogView&)>;

struct BootstrapOptions {
  int replicates = 200;
  double level = 0.95;
  std::uint64_t seed = 0;
  int workers = 1;
  int max_redraws = 10;
};

struct BootstrapResult {
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values;  ///< per replicate; NaN when undefined after redraws
  std::size_t undefined = 0;
};

/// Storm-resampling percentile bootstrap. Replicate b uses its own stream.
BootstrapResult bootstrap_ci(const CatalogStatistic& statistic, const CatalogView& view,
                             const BootstrapOptions& options = {});
BootstrapResult bootstrap_ci(const CatalogStatistic& statistic, const Catalog& catalog,
                             const BootstrapOptions& options = {});

/// Fills ci_lo/ci_hi from a bootstrap and widens the interval to contain the
/// estimate.
void attach_interval(RiskResult& result, const BootstrapResult& boot);

/// Per-cell bootstrap percentile bands of the spatial density.
struct DensityBands {
  std::vector<double> estimate;
  std::vector<double> lo;
  std::vector<double> hi;
};
DensityBands density_bootstrap(const Catalog& catalog, const GridSpec& grid, DensitySubset subset,
                               const BootstrapOptions& options = {});

struct QqRow {
  double prob = 0.0;
  double observed = 0.0;
  double simulated = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool inside = false;
};

struct QqOptions {
  std::vector<double> probs;  ///< empty: (i - 0.5)/100 for i = 1..100
  double level = 0.95;
  int replicates = 200;
  std::uint64_t seed = 0;
};

/// Pointwise tolerance bands from quantiles of simulated resamples of the
/// observed size.
std::vector<QqRow> qq_envelope(std::span<const double> observed, std::span<const double> simulated,
                               const QqOptions& options = {});
/// As above, resampling whole simulated groups (storms): each replicate
/// draws as many groups as were observed.
std::vector<QqRow> qq_envelope_grouped(const std::vector<std::vector<double>>& observed,
                                       const std::vector<std::vector<double>>& simulated,
                                       const QqOptions& options = {});

double fraction_inside(const std::vector<QqRow>& rows);

}  // namespace etcsim
