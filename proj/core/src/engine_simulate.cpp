#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "engine_internal.hpp"
#include "etcsim/errors.hpp"
#include "etcsim/geometry.hpp"
#include "etcsim/rng.hpp"

namespace etcsim {

std::string to_string(SamplerTag t) {
  switch (t) {
    case SamplerTag::Genesis: return "genesis";
    case SamplerTag::Body: return "body";
    case SamplerTag::TailChain: return "tail-chain";
  }
  return "unknown";
}

std::string to_string(TerminationCause c) {
  switch (c) {
    case TerminationCause::Hazard: return "hazard";
    case TerminationCause::Geographic: return "geographic";
    case TerminationCause::MaxAge: return "max-age";
  }
  return "unknown";
}

bool point_in_polygon(LonLat p, const std::vector<LonLat>& poly) noexcept {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.lat > p.lat) != (b.lat > p.lat) &&
        p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon) {
      inside = !inside;
    }
  }
  return inside;
}

Catalog SyntheticCatalog::to_catalog() const {
  std::vector<StormTrack> tracks;
  tracks.reserve(storms.size());
  for (const auto& s : storms) tracks.push_back(s.track);
  return Catalog(std::move(tracks), years_of_record);
}

std::map<TerminationCause, std::size_t> SyntheticCatalog::cause_histogram() const {
  std::map<TerminationCause, std::size_t> h{{TerminationCause::Hazard, 0},
                                            {TerminationCause::Geographic, 0},
                                            {TerminationCause::MaxAge, 0}};
  for (const auto& s : storms) ++h[s.cause];
  return h;
}

namespace {

// Conditional samplers for one kernel model: index a-1 conditions on the last
// `a` predecessors (a = 1..k).
struct LagSamplers {
  std::vector<ConditionalKde> by_available;
};

LagSamplers make_lag_samplers(const KdeModel& m, int k, bool extra_given) {
  LagSamplers s;
  for (int a = 1; a <= k; ++a) {
    std::vector<int> given;
    for (int i = k - a; i < k; ++i) given.push_back(i);
    if (extra_given) given.push_back(k);
    s.by_available.emplace_back(m, given, std::vector<int>{extra_given ? k + 1 : k});
  }
  return s;
}

struct Step {
  double speed;
  double bearing;
};

}  // namespace

struct Simulator::Impl {
  ModelBundle bundle;
  int k = 3;
  std::vector<int> pos_of;
  std::vector<int> genesis_src, bearing_src, speed_src, vort_src;
  std::vector<LagSamplers> bearing, speed, vort;  // by cell position (own models only)
  std::optional<TailChain> chain;
  double u_l = 0.0;

  explicit Impl(const ModelBundle& b) : bundle(b), k(b.config.order) {
    const auto& active = bundle.grid.active_cells();
    if (bundle.cells.size() != active.size()) {
      throw Error(ErrorKind::Schema, "bundle cell models do not match the active grid");
    }
    pos_of.assign(static_cast<std::size_t>(bundle.grid.cell_count()), -1);
    for (std::size_t i = 0; i < active.size(); ++i) pos_of[active[i]] = static_cast<int>(i);
    const auto has = [&](auto member) {
      std::vector<char> h;
      for (const auto& c : bundle.cells) h.push_back((c.*member).has_value() ? 1 : 0);
      return h;
    };
    genesis_src = detail::nearest_source(bundle.grid, active, has(&CellModels::genesis));
    bearing_src = detail::nearest_source(bundle.grid, active, has(&CellModels::bearing));
    speed_src = detail::nearest_source(bundle.grid, active, has(&CellModels::speed));
    vort_src = detail::nearest_source(bundle.grid, active, has(&CellModels::vorticity));
    for (const auto* src : {&genesis_src, &bearing_src, &speed_src, &vort_src}) {
      if (std::any_of(src->begin(), src->end(), [](int v) { return v < 0; })) {
        throw Error(ErrorKind::Validation, "bundle lacks a kernel model for some variable in every cell");
      }
    }
    bearing.resize(bundle.cells.size());
    speed.resize(bundle.cells.size());
    vort.resize(bundle.cells.size());
    for (std::size_t i = 0; i < bundle.cells.size(); ++i) {
      const auto& c = bundle.cells[i];
      if (c.bearing) bearing[i] = make_lag_samplers(*c.bearing, k, false);
      if (c.speed) speed[i] = make_lag_samplers(*c.speed, k, true);
      if (c.vorticity) vort[i] = make_lag_samplers(*c.vorticity, k, true);
    }
    if (bundle.config.extremes) {
      if (!bundle.preprocess || !bundle.marginal || !bundle.condex) {
        throw Error(ErrorKind::Schema, "bundle has extremes enabled but lacks the tail models");
      }
      chain.emplace(*bundle.condex);
      u_l = bundle.laplace_threshold();
    }
  }

  int cell_pos(LonLat p) const {
    const int f = bundle.grid.flat_index(p);
    if (f < 0 || !bundle.grid.is_active(f)) return -1;
    return pos_of[f];
  }

  // Draws (x0, v0, theta0, omega0); throws Fit on repeated failure.
  std::array<double, 5> genesis(Rng& rng) const {
    const auto& cfg = bundle.config;
    for (int tries = 0; tries < cfg.max_genesis_draws; ++tries) {
      const Eigen::VectorXd z = bundle.genesis_location.sample(rng);
      if (std::abs(z(1)) >= 89.999) continue;
      const LonLat x{normalize_lon(z(0)), z(1)};
      const int pos = cell_pos(x);
      if (pos < 0) continue;
      const auto& model = *bundle.cells[genesis_src[pos]].genesis;
      for (int d = 0; d < cfg.max_positivity_draws; ++d) {
        const Eigen::VectorXd g = model.sample(rng);
        if (g(0) > 0.0 && g(2) > 0.0) return {x.lon, x.lat, g(0), wrap_angle(g(1)), g(2)};
      }
      throw Error(ErrorKind::Fit, "genesis: no positive (speed, vorticity) draw");
    }
    throw Error(ErrorKind::Fit, "genesis: no location draw inside an active cell");
  }

  static double sample_or_marginal(const ConditionalKde& c, const Eigen::VectorXd& given, Rng& rng) {
    try {
      return c.sample(given, rng)(0);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UnsupportedConditioning) throw;
      return c.sample_marginal(rng)(0);
    }
  }

  // theta_j and v_j at point j; nullopt on geographic termination.
  std::optional<std::pair<Step, LonLat>> propagate(const std::vector<Step>& steps, LonLat x, int pos,
                                                   Rng& rng, SimulationStats& st) const {
    const int j = static_cast<int>(steps.size());
    const int a = std::min(j, k);
    const auto& bs = bearing[bearing_src[pos]].by_available[a - 1];
    const auto& ss = speed[speed_src[pos]].by_available[a - 1];
    std::vector<double> th;
    for (int i = j - a; i < j; ++i) th.push_back(steps[i].bearing);
    const auto rel = detail::unwrap_relative(th);
    const Eigen::VectorXd given_theta = Eigen::Map<const Eigen::VectorXd>(rel.data(), a);
    Eigen::VectorXd given_speed(a + 1);
    for (int i = 0; i < a; ++i) given_speed(i) = steps[j - a + i].speed;

    for (int r = 0; r < bundle.config.max_propagation_redraws; ++r) {
      const double theta = wrap_angle(sample_or_marginal(bs, given_theta, rng));
      given_speed(a) = theta;
      double v = -1.0;
      for (int d = 0; d < bundle.config.max_positivity_draws && !(v > 0.0); ++d) {
        v = sample_or_marginal(ss, given_speed, rng);
      }
      if (!(v > 0.0)) {
        v = steps.back().speed;
        ++st.positivity_fallbacks;
      }
      LonLat next;
      try {
        next = destination_point(x, v, theta);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::PoleDegeneracy) throw;
        continue;
      }
      if (std::abs(next.lat) < 90.0 && cell_pos(next) >= 0) return std::make_pair(Step{v, theta}, next);
    }
    return std::nullopt;
  }

  double body_vorticity(const std::vector<TrackPoint>& pts, const std::vector<Step>& steps, int pos,
                        Rng& rng, SimulationStats& st) const {
    const int j = static_cast<int>(pts.size()) - 1;
    const int a = std::min(j, k);
    const auto& vs = vort[vort_src[pos]].by_available[a - 1];
    Eigen::VectorXd given(a + 1);
    for (int i = 0; i < a; ++i) given(i) = pts[j - a + i].vorticity;
    given(a) = steps[j - 1].bearing;
    for (int d = 0; d < bundle.config.max_positivity_draws; ++d) {
      const double w = sample_or_marginal(vs, given, rng);
      if (w > 0.0) return w;
    }
    ++st.positivity_fallbacks;
    return pts[j - 1].vorticity;
  }

  PointCovariates covariates(const std::vector<TrackPoint>& pts, const std::vector<Step>& steps,
                             std::size_t t) const {
    const auto& s = steps[t == 0 ? 0 : t - 1];
    return {pts[t].lon, pts[t].lat, s.bearing, s.speed};
  }

  // Vorticity of the newest point (pts.back() has a placeholder value).
  std::pair<double, SamplerTag> vorticity(const std::vector<TrackPoint>& pts, const std::vector<Step>& steps,
                                          int pos, Rng& rng, SimulationStats& st) const {
    const int j = static_cast<int>(pts.size()) - 1;
    if (chain) {
      const auto& pp = *bundle.preprocess;
      if (pp.window.contains(pts[j].lon, pts[j].lat)) {
        TailChainState state;
        for (int i = std::max(0, j - k); i < j; ++i) {
          const auto& p = pts[i];
          if (pp.window.contains(p.lon, p.lat)) {
            const double w = to_residual(p.vorticity, covariates(pts, steps, static_cast<std::size_t>(i)), pp);
            state.recent.push_back(bundle.marginal->to_laplace(w));
          } else {
            state.recent.push_back(-kLaplaceClamp);
          }
        }
        if (const auto l = effective_order(state.recent, u_l, k)) {
          state.effective_order = *l;
          const auto nu = covariates(pts, steps, static_cast<std::size_t>(j));
          for (int attempt = 0; attempt < 2; ++attempt) {
            bool fell_back = false;
            const double s = chain->step(state, rng, &fell_back);
            if (fell_back) ++st.tail_chain_fallbacks;
            try {
              const double omega = from_residual(bundle.marginal->from_laplace(s), nu, pp);
              if (omega > 0.0 && std::isfinite(omega)) {
                ++st.tail_chain_steps;
                return {omega, SamplerTag::TailChain};
              }
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::InvalidInverse) throw;
            }
          }
        }
      }
    }
    ++st.body_steps;
    return {body_vorticity(pts, steps, pos, rng, st), SamplerTag::Body};
  }

  double hazard(const std::vector<TrackPoint>& pts, const SimulationOptions& opt) const {
    const std::size_t t = pts.size() - 1;
    const double age = static_cast<double>(pts.size());
    if (age < static_cast<double>(bundle.gam.min_age)) return 0.0;
    const auto& region = bundle.config.termination_region;
    if (!region.empty() && !point_in_polygon(pts[t].position(), region)) return 0.0;
    if (opt.forced_hazard) return *opt.forced_hazard;
    HazardInputs in;
    in.vorticity = pts[t].vorticity;
    in.vorticity_drop = t > 0 ? pts[t - 1].vorticity - pts[t].vorticity : 0.0;
    in.age = age;
    in.lon = pts[t].lon;
    in.lat = pts[t].lat;
    return bundle.gam.hazard(in);
  }

  // One attempt; nullopt when the storm ends geographically before 8 points.
  std::optional<SyntheticTrack> attempt(Rng& rng, const SimulationOptions& opt, SimulationStats& st) const {
    const int max_age = opt.max_age.value_or(bundle.config.max_age);
    std::array<double, 5> g;
    try {
      g = genesis(rng);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Fit) throw;
      return std::nullopt;
    }
    std::vector<TrackPoint> pts{{g[0], g[1], 0, g[4]}};
    std::vector<SamplerTag> tags{SamplerTag::Genesis};
    std::vector<Step> steps;
    SyntheticTrack out;
    bool first = true;
    for (;;) {
      const LonLat x = pts.back().position();
      const int pos = cell_pos(x);
      std::optional<std::pair<Step, LonLat>> moved;
      if (first) {
        // Genesis (v0, theta0) must also lead into an active cell.
        Step s0{g[2], g[3]};
        for (int r = 0; r < bundle.config.max_propagation_redraws && !moved; ++r) {
          if (r > 0) {
            const auto& model = *bundle.cells[genesis_src[pos]].genesis;
            Eigen::VectorXd d = model.sample(rng);
            if (!(d(0) > 0.0)) continue;
            s0 = {d(0), wrap_angle(d(1))};
          }
          try {
            const LonLat nx = destination_point(x, s0.speed, s0.bearing);
            if (std::abs(nx.lat) < 90.0 && cell_pos(nx) >= 0) moved = std::make_pair(s0, nx);
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::PoleDegeneracy) throw;
          }
        }
        first = false;
      } else {
        moved = propagate(steps, x, pos, rng, st);
      }
      if (!moved) {
        out.cause = TerminationCause::Geographic;
        break;
      }
      steps.push_back(moved->first);
      const LonLat nx = moved->second;
      pts.push_back({nx.lon, nx.lat, static_cast<long>(pts.size()), 0.0});
      const auto [omega, tag] = vorticity(pts, steps, cell_pos(nx), rng, st);
      pts.back().vorticity = omega;
      tags.push_back(tag);

      const double p = hazard(pts, opt);
      if (p > 0.0 && uniform01(rng) < p) {
        out.cause = TerminationCause::Hazard;
        break;
      }
      if (static_cast<int>(pts.size()) >= max_age) {
        out.cause = TerminationCause::MaxAge;
        break;
      }
    }
    if (pts.size() < kMinTrackPoints) {
      ++st.discarded_short;
      return std::nullopt;
    }
    out.track = StormTrack("", std::move(pts));
    out.tags = std::move(tags);
    return out;
  }
};

Simulator::Simulator(const ModelBundle& bundle) : impl_(std::make_unique<Impl>(bundle)) {}
Simulator::~Simulator() = default;

const ModelBundle& Simulator::bundle() const noexcept { return impl_->bundle; }

std::array<double, 5> Simulator::simulate_genesis(Rng& rng) const { return impl_->genesis(rng); }

SyntheticTrack Simulator::simulate_storm(std::uint64_t seed, const SimulationOptions& options,
                                         SimulationStats* stats) const {
  Rng rng(seed);
  SimulationStats local;
  SimulationStats& st = stats ? *stats : local;
  for (int a = 0; a < options.max_attempts_per_storm; ++a) {
    if (auto s = impl_->attempt(rng, options, st)) {
      s->seed = seed;
      return std::move(*s);
    }
  }
  throw Error(ErrorKind::Fit, "simulation: no storm of at least 8 points after " +
                                  std::to_string(options.max_attempts_per_storm) + " attempts");
}

SyntheticCatalog Simulator::simulate_catalog(const SimulationOptions& options) const {
  if (options.storms < 1) throw Error(ErrorKind::Argument, "simulation needs N >= 1");
  const std::size_t n = options.storms;
  std::vector<SyntheticTrack> out(n);
  std::vector<SimulationStats> stats(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = simulate_storm(derive_stream_seed(options.seed, i), options, &stats[i]);
        out[i].track = StormTrack("sim" + std::to_string(i), out[i].track.points());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SyntheticCatalog cat;
  cat.storms = std::move(out);
  cat.years_of_record = static_cast<double>(n) / impl_->bundle.storms_per_year;
  for (const auto& s : stats) {
    cat.stats.discarded_short += s.discarded_short;
    cat.stats.tail_chain_steps += s.tail_chain_steps;
    cat.stats.body_steps += s.body_steps;
    cat.stats.tail_chain_fallbacks += s.tail_chain_fallbacks;
    cat.stats.positivity_fallbacks += s.positivity_fallbacks;
  }
  return cat;
}

SyntheticCatalog simulate_catalog(const ModelBundle& bundle, const SimulationOptions& options) {
  return Simulator(bundle).simulate_catalog(options);
}

}  // namespace etcsim
