#include "etcsim/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "etcsim/errors.hpp"

namespace etcsim {

StormTrack::StormTrack(std::string id, std::vector<TrackPoint> points)
    : id_(std::move(id)), points_(std::move(points)) {
  if (points_.size() < kMinTrackPoints) {
    throw Error(ErrorKind::Validation,
                "storm '" + id_ + "' has " + std::to_string(points_.size()) +
                    " points; at least 8 (24 h) required");
  }
  speed_.reserve(points_.size() - 1);
  bearing_.reserve(points_.size() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const TrackPoint& p = points_[i];
    if (!(std::abs(p.lat) < 90.0) || !std::isfinite(p.lon) || !std::isfinite(p.vorticity)) {
      throw Error(ErrorKind::Validation, "storm '" + id_ + "' has an invalid point");
    }
    points_[i].lon = normalize_lon(p.lon);
    if (i == 0) continue;
    if (p.time_index != points_[i - 1].time_index + 1) {
      throw Error(ErrorKind::Validation,
                  "storm '" + id_ + "' has non-contiguous time_index at " +
                      std::to_string(p.time_index));
    }
    const LonLat a = points_[i - 1].position();
    const LonLat b = points_[i].position();
    const double d = great_circle_distance(a, b);
    speed_.push_back(d / kStepSeconds);
    // A stationary step has no direction; report due north.
    bearing_.push_back(d > 0.0 ? initial_bearing(a, b) : 0.0);
  }
}

Catalog::Catalog(std::vector<StormTrack> storms, double years_of_record)
    : storms_(std::move(storms)), years_(years_of_record) {
  if (storms_.empty()) throw Error(ErrorKind::Validation, "catalog contains no storms");
  if (!(years_ > 0.0) || !std::isfinite(years_)) {
    throw Error(ErrorKind::Validation, "years_of_record must be positive and finite");
  }
}

double Catalog::storms_per_year() const noexcept {
  return static_cast<double>(storms_.size()) / years_;
}

std::size_t Catalog::point_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : storms_) n += s.size();
  return n;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && first != last;
}

}  // namespace

Catalog load_catalog(std::istream& in, double years_of_record, LoadReport* report) {
  LoadReport local;
  std::string line;
  std::size_t line_no = 0;
  int col_id = -1, col_t = -1, col_lon = -1, col_lat = -1, col_vort = -1;
  std::size_t n_cols = 0;
  bool have_header = false;
  std::map<std::string, std::vector<TrackPoint>> grouped;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      constexpr std::string_view key = "years_of_record=";
      const auto pos = view.find(key);
      if (pos != std::string_view::npos) {
        std::string_view value = view.substr(pos + key.size());
        value = value.substr(0, value.find_first_of(" \t,;"));
        double years = 0.0;
        if (!parse_number(value, years)) {
          throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad years_of_record");
        }
        years_of_record = years;
        local.years_from_file = true;
      }
      continue;
    }
    const auto fields = split(view);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const int idx = static_cast<int>(i);
        if (fields[i] == "storm_id") col_id = idx;
        else if (fields[i] == "time_index") col_t = idx;
        else if (fields[i] == "lon") col_lon = idx;
        else if (fields[i] == "lat") col_lat = idx;
        else if (fields[i] == "vorticity") col_vort = idx;
      }
      if (col_id < 0 || col_t < 0 || col_lon < 0 || col_lat < 0 || col_vort < 0) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                          ": header must contain storm_id,time_index,lon,lat,vorticity");
      }
      n_cols = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != n_cols) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(n_cols) + " fields, found " +
                                        std::to_string(fields.size()));
    }
    TrackPoint p;
    const bool ok = parse_number(fields[col_t], p.time_index) &&
                    parse_number(fields[col_lon], p.lon) &&
                    parse_number(fields[col_lat], p.lat) &&
                    parse_number(fields[col_vort], p.vorticity);
    if (!ok || fields[col_id].empty()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": malformed row");
    }
    grouped[std::string(fields[col_id])].push_back(p);
    ++local.rows;
  }
  if (!have_header) throw Error(ErrorKind::Parse, "missing header row");

  std::vector<StormTrack> storms;
  for (auto& [id, points] : grouped) {
    std::sort(points.begin(), points.end(),
              [](const TrackPoint& a, const TrackPoint& b) { return a.time_index < b.time_index; });
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (points[i].time_index == points[i - 1].time_index) {
        throw Error(ErrorKind::Validation, "storm '" + id + "' has duplicate time_index " +
                                               std::to_string(points[i].time_index));
      }
      if (points[i].time_index != points[i - 1].time_index + 1) {
        throw Error(ErrorKind::Validation, "storm '" + id + "' has non-contiguous time_index");
      }
    }
    if (points.size() < kMinTrackPoints) {
      ++local.rejected_short;
      continue;
    }
    storms.emplace_back(id, std::move(points));
  }
  if (storms.empty()) {
    throw Error(ErrorKind::Validation,
                "no storm has the minimum lifespan of 8 steps (" +
                    std::to_string(local.rejected_short) + " rejected)");
  }
  if (report) *report = local;
  return Catalog(std::move(storms), years_of_record);
}

Catalog load_catalog(const std::filesystem::path& path, double years_of_record, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open catalog '" + path.string() + "'");
  return load_catalog(in, years_of_record, report);
}

}  // namespace etcsim
