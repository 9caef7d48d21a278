#include <fstream>
#include <sstream>

#include "etcsim/bundle_io.hpp"
#include "etcsim/errors.hpp"
#include "etcsim_cli/cli.hpp"
#include "json.hpp"

namespace etcsim::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Validation, "config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::Validation, "config: unknown key '" + where + key + "'");
  }
}

std::filesystem::path resolve(const json& j, const std::filesystem::path& base) {
  std::filesystem::path p = j.get<std::string>();
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

std::pair<double, double> range(const json& j, const std::string& what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2 || !(v[0] < v[1])) throw Error(ErrorKind::Validation, "config: " + what + " must be [min, max]");
  return {v[0], v[1]};
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    check_keys(j, {"catalog", "years_of_record", "bundle", "output_dir", "simulated", "seed", "fit", "simulate", "risk",
                   "diagnose"},
               "");
    if (j.contains("catalog")) c.catalog = resolve(j["catalog"], base);
    if (j.contains("years_of_record")) c.years_of_record = j["years_of_record"].get<double>();
    if (j.contains("bundle")) c.bundle = resolve(j["bundle"], base);
    if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"], base);
    if (j.contains("simulated")) c.simulated = resolve(j["simulated"], base);
    // Master seed shared by simulation, bootstrap and QQ resampling.
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("fit")) c.fit = engine_config_from_json(j["fit"].dump(), c.fit);
    if (j.contains("simulate")) {
      const auto& s = j["simulate"];
      check_keys(s, {"storms", "seed", "workers", "max_age"}, "simulate.");
      if (s.contains("storms")) {
        const auto n = s["storms"].get<long long>();
        if (n < 1) throw Error(ErrorKind::Validation, "config: simulate.storms must be >= 1");
        c.storms = static_cast<std::size_t>(n);
      }
      if (s.contains("seed")) c.seed = s["seed"].get<std::uint64_t>();
      if (s.contains("workers")) c.workers = s["workers"].get<int>();
      if (s.contains("max_age")) c.max_age = s["max_age"].get<int>();
    }
    if (j.contains("risk")) {
      const auto& r = j["risk"];
      check_keys(r, {"regions", "return_periods", "omegas", "bootstrap", "level", "map"}, "risk.");
      if (r.contains("regions")) {
        c.regions.clear();
        for (const auto& reg : r["regions"]) {
          check_keys(reg, {"name", "lon", "lat"}, "risk.regions[].");
          NamedRegion nr;
          nr.name = reg.at("name").get<std::string>();
          std::tie(nr.region.lon_min, nr.region.lon_max) = range(reg.at("lon"), "region lon");
          std::tie(nr.region.lat_min, nr.region.lat_max) = range(reg.at("lat"), "region lat");
          c.regions.push_back(nr);
        }
      }
      if (r.contains("return_periods")) c.return_periods = r["return_periods"].get<std::vector<double>>();
      if (r.contains("omegas")) c.omegas = r["omegas"].get<std::vector<double>>();
      if (r.contains("bootstrap")) c.bootstrap = r["bootstrap"].get<int>();
      if (r.contains("level")) c.level = r["level"].get<double>();
      if (r.contains("map")) {
        const auto& m = r["map"];
        check_keys(m, {"dlon", "dlat", "omega"}, "risk.map.");
        if (m.contains("dlon")) c.map_dlon = m["dlon"].get<double>();
        if (m.contains("dlat")) c.map_dlat = m["dlat"].get<double>();
        if (m.contains("omega")) c.map_omega = m["omega"].get<double>();
      }
    }
    if (j.contains("diagnose")) {
      const auto& d = j["diagnose"];
      check_keys(d, {"pacf_lags", "qq_replicates"}, "diagnose.");
      if (d.contains("pacf_lags")) c.pacf_lags = d["pacf_lags"].get<int>();
      if (d.contains("qq_replicates")) c.qq_replicates = d["qq_replicates"].get<int>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

// Worker count is left out: it never changes results.
std::string RunConfig::echo() const {
  json regs = json::array();
  for (const auto& r : regions) {
    regs.push_back({{"name", r.name},
                    {"lon", {r.region.lon_min, r.region.lon_max}},
                    {"lat", {r.region.lat_min, r.region.lat_max}}});
  }
  json j = {{"catalog", catalog.string()},
            {"years_of_record", years_of_record ? json(*years_of_record) : json(nullptr)},
            {"bundle", bundle.string()},
            {"output_dir", output_dir.string()},
            {"fit", json::parse(engine_config_to_json(fit))},
            {"simulate",
             {{"storms", storms},
              {"seed", seed ? json(*seed) : json(nullptr)},
              {"max_age", max_age ? json(*max_age) : json(nullptr)}}},
            {"risk",
             {{"regions", regs},
              {"return_periods", return_periods},
              {"omegas", omegas},
              {"bootstrap", bootstrap},
              {"level", level},
              {"map", {{"dlon", map_dlon}, {"dlat", map_dlat}, {"omega", map_omega ? json(*map_omega) : json(nullptr)}}}}},
            {"diagnose", {{"pacf_lags", pacf_lags}, {"qq_replicates", qq_replicates}}}};
  return j.dump();
}

}  // namespace etcsim::cli
