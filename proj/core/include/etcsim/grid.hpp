/**
 * @file grid.hpp
 * @brief Regular lon/lat grid with half-open cells and an active-cell set.
 */
#pragma once

#include <optional>
#include <vector>

#include "etcsim/geometry.hpp"

namespace etcsim {

class Catalog;

struct Cell {
  int ix = 0;  ///< column (longitude)
  int iy = 0;  ///< row (latitude)
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Cells are [lon0 + ix*dlon, lon0 + (ix+1)*dlon) x [lat0 + iy*dlat, ...).
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(double lon0, double lat0, double dlon, double dlat, int nlon, int nlat);

  /// Covers the whole sphere starting at (lon0, lat0) = (-180, -90).
  static GridSpec global(double dlon, double dlat);

  double lon0() const noexcept { return lon0_; }
  double lat0() const noexcept { return lat0_; }
  double dlon() const noexcept { return dlon_; }
  double dlat() const noexcept { return dlat_; }
  int nlon() const noexcept { return nlon_; }
  int nlat() const noexcept { return nlat_; }
  int cell_count() const noexcept { return nlon_ * nlat_; }

  /// Cell containing p, or nullopt when p lies outside the grid.
  std::optional<Cell> cell_of(LonLat p) const noexcept;
  /// Flat index iy * nlon + ix, or -1 outside the grid.
  int flat_index(LonLat p) const noexcept;
  int flat(Cell c) const noexcept { return c.iy * nlon_ + c.ix; }
  Cell unflat(int flat) const noexcept { return Cell{flat % nlon_, flat / nlon_}; }
  LonLat center(int flat) const noexcept;

  /// Per-cell observed point counts (size cell_count()).
  const std::vector<int>& counts() const noexcept { return counts_; }
  bool is_active(int flat) const noexcept;
  /// Flat indices of active cells, ascending.
  const std::vector<int>& active_cells() const noexcept { return active_; }

  /// Marks cells with at least `min_count` observed points as active.
  void set_counts(std::vector<int> counts, int min_count);

 private:
  double lon0_ = -180.0;
  double lat0_ = -90.0;
  double dlon_ = 8.0;
  double dlat_ = 4.0;
  int nlon_ = 45;
  int nlat_ = 45;
  std::vector<int> counts_;
  std::vector<int> active_;
  std::vector<char> active_mask_;
};

/// Builds the grid and counts every observed track point into it.
/// Points outside the grid are a validation error.
GridSpec grid_from_catalog(const Catalog& catalog, GridSpec layout, int min_count = 1);

}  // namespace etcsim
