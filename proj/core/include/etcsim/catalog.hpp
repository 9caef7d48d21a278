/**
 * @file catalog.hpp
 * @brief Storm-track catalog: ingestion, validation and derived kinematics.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "etcsim/geometry.hpp"

namespace etcsim {

/// Shortest admissible track (24 h of 3-hourly points).
inline constexpr std::size_t kMinTrackPoints = 8;

struct TrackPoint {
  double lon{};
  double lat{};
  long time_index{};
  double vorticity{};  ///< relative vorticity, units of 1e-5 s^-1

  LonLat position() const noexcept { return {lon, lat}; }
};

/// A time-ordered track. `speed[i]` and `bearing[i]` describe the step from
/// point i to point i+1, so both have size points.size() - 1.
class StormTrack {
 public:
  StormTrack() = default;
  /// Validates contiguity and derives speed (m/s) and bearing (rad).
  StormTrack(std::string id, std::vector<TrackPoint> points);

  const std::string& id() const noexcept { return id_; }
  const std::vector<TrackPoint>& points() const noexcept { return points_; }
  const std::vector<double>& speed() const noexcept { return speed_; }
  const std::vector<double>& bearing() const noexcept { return bearing_; }
  std::size_t size() const noexcept { return points_.size(); }

 private:
  std::string id_;
  std::vector<TrackPoint> points_;
  std::vector<double> speed_;
  std::vector<double> bearing_;
};

class Catalog {
 public:
  Catalog() = default;
  Catalog(std::vector<StormTrack> storms, double years_of_record);

  const std::vector<StormTrack>& storms() const noexcept { return storms_; }
  double years_of_record() const noexcept { return years_; }
  double storms_per_year() const noexcept;
  std::size_t point_count() const noexcept;

 private:
  std::vector<StormTrack> storms_;
  double years_{1.0};
};

struct LoadReport {
  std::size_t rows = 0;
  std::size_t rejected_short = 0;  ///< tracks dropped for having < 8 points
  bool years_from_file = false;
};

/**
 * Reads the flat CSV schema `storm_id,time_index,lon,lat,vorticity` (extra
 * columns are ignored, lines starting with '#' are comments). A comment of the
 * form `# years_of_record=<x>` overrides `years_of_record`.
 *
 * Storms are grouped by id and sorted by time index. Tracks shorter than eight
 * points are dropped and counted in the report; an empty result is a
 * validation error, as are duplicate or non-contiguous time indices.
 */
Catalog load_catalog(std::istream& in, double years_of_record, LoadReport* report = nullptr);
Catalog load_catalog(const std::filesystem::path& path, double years_of_record,
                     LoadReport* report = nullptr);

}  // namespace etcsim
