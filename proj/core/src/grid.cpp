#include "etcsim/grid.hpp"

#include <cmath>

#include "etcsim/catalog.hpp"
#include "etcsim/errors.hpp"

namespace etcsim {

GridSpec::GridSpec(double lon0, double lat0, double dlon, double dlat, int nlon, int nlat)
    : lon0_(lon0), lat0_(lat0), dlon_(dlon), dlat_(dlat), nlon_(nlon), nlat_(nlat) {
  if (!(dlon > 0.0) || !(dlat > 0.0) || nlon <= 0 || nlat <= 0) {
    throw Error(ErrorKind::Argument, "grid cell sizes and counts must be positive");
  }
  counts_.assign(static_cast<std::size_t>(nlon_) * nlat_, 0);
  active_mask_.assign(counts_.size(), 0);
}

GridSpec GridSpec::global(double dlon, double dlat) {
  if (!(dlon > 0.0) || !(dlat > 0.0)) {
    throw Error(ErrorKind::Argument, "grid cell sizes must be positive");
  }
  return GridSpec(-180.0, -90.0, dlon, dlat, static_cast<int>(std::ceil(360.0 / dlon - 1e-9)),
                  static_cast<int>(std::ceil(180.0 / dlat - 1e-9)));
}

std::optional<Cell> GridSpec::cell_of(LonLat p) const noexcept {
  const double fx = (p.lon - lon0_) / dlon_;
  const double fy = (p.lat - lat0_) / dlat_;
  if (!std::isfinite(fx) || !std::isfinite(fy)) return std::nullopt;
  const double ix = std::floor(fx);
  const double iy = std::floor(fy);
  if (ix < 0 || iy < 0 || ix >= nlon_ || iy >= nlat_) return std::nullopt;
  return Cell{static_cast<int>(ix), static_cast<int>(iy)};
}

int GridSpec::flat_index(LonLat p) const noexcept {
  const auto c = cell_of(p);
  return c ? flat(*c) : -1;
}

LonLat GridSpec::center(int flat_idx) const noexcept {
  const Cell c = unflat(flat_idx);
  return LonLat{lon0_ + (c.ix + 0.5) * dlon_, lat0_ + (c.iy + 0.5) * dlat_};
}

bool GridSpec::is_active(int flat_idx) const noexcept {
  return flat_idx >= 0 && flat_idx < cell_count() && active_mask_[flat_idx] != 0;
}

void GridSpec::set_counts(std::vector<int> counts, int min_count) {
  if (counts.size() != static_cast<std::size_t>(cell_count())) {
    throw Error(ErrorKind::Shape, "cell count vector does not match grid");
  }
  counts_ = std::move(counts);
  active_.clear();
  active_mask_.assign(counts_.size(), 0);
  for (int i = 0; i < cell_count(); ++i) {
    if (counts_[i] >= min_count && counts_[i] > 0) {
      active_.push_back(i);
      active_mask_[i] = 1;
    }
  }
}

GridSpec grid_from_catalog(const Catalog& catalog, GridSpec layout, int min_count) {
  std::vector<int> counts(static_cast<std::size_t>(layout.cell_count()), 0);
  for (const auto& storm : catalog.storms()) {
    for (const auto& p : storm.points()) {
      const int idx = layout.flat_index(p.position());
      if (idx < 0) {
        throw Error(ErrorKind::Validation, "storm '" + storm.id() + "' leaves the grid domain");
      }
      ++counts[idx];
    }
  }
  layout.set_counts(std::move(counts), min_count);
  return layout;
}

}  // namespace etcsim
