#include "floc/harness.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace floc {

ManeuverScenario sweep_case(const SweepConfig& cfg, double altitude_m, GuardMode mode, double mach,
                            double alpha_cmd_deg, double p_cmd_deg_s) {
  ManeuverScenario s;
  s.name = "sweep";
  s.aircraft_file = cfg.aircraft_file;
  s.schedule_file = cfg.schedule_file;
  s.mach = mach;
  s.altitude_m = altitude_m;
  s.cg = cfg.cg;
  s.duration_s = cfg.duration_s;
  s.dt_s = cfg.dt_s;
  s.guard = mode;
  s.alpha_deg.knots = {{cfg.step_time_s, alpha_cmd_deg}};
  s.p_deg_s.knots = {{cfg.step_time_s, p_cmd_deg_s}};
  s.controller = cfg.controller;
  s.classification = cfg.classification;
  s.divergence = cfg.divergence;
  return s;
}

SweepResult monte_carlo_sweep(const Aircraft& ac, const SweepConfig& cfg,
                              const LimiterSchedule* schedule, int jobs,
                              const std::vector<std::size_t>* order) {
  cfg.validate();
  const auto machs = cfg.mach.values();
  const auto alphas = cfg.alpha_cmd_deg.values();
  const auto rolls = cfg.p_cmd_deg_s.values();

  SweepResult out;
  for (double h : cfg.altitudes_m)
    for (GuardMode mode : cfg.modes)
      for (double mach : machs)
        for (double a : alphas)
          for (double p : rolls) {
            SweepPoint pt;
            pt.altitude_m = h;
            pt.mode = mode;
            pt.mach = mach;
            pt.alpha_cmd_deg = a;
            pt.p_cmd_deg_s = p;
            out.points.push_back(pt);
          }

  // One trim per flight condition, shared read-only by all workers.
  std::map<std::pair<double, double>, TrimResult> trims;
  std::map<std::pair<double, double>, std::string> trim_errors;
  for (double h : cfg.altitudes_m)
    for (double mach : machs) {
      try {
        trims.emplace(std::make_pair(h, mach), trim_level_flight(ac, mach, h));
      } catch (const std::exception& e) {
        trim_errors.emplace(std::make_pair(h, mach), e.what());
        out.errors.push_back(std::string("trim failed: ") + e.what());
      }
    }

  std::vector<std::size_t> sequence(out.points.size());
  if (order) {
    if (order->size() != sequence.size()) throw ConfigError("sweep: execution order has wrong size");
    sequence = *order;
  } else {
    std::iota(sequence.begin(), sequence.end(), 0);
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::vector<std::string> point_errors(out.points.size());
  auto worker = [&] {
    RunOptions opt;
    opt.keep_history = false;
    opt.schedule = schedule;
    for (std::size_t i = next++; i < sequence.size(); i = next++) {
      SweepPoint& pt = out.points.at(sequence[i]);
      const auto key = std::make_pair(pt.altitude_m, pt.mach);
      if (auto e = trim_errors.find(key); e != trim_errors.end()) {
        pt.error = e->second;
        continue;
      }
      opt.trim = &trims.at(key);
      try {
        const ManeuverScenario sc =
            sweep_case(cfg, pt.altitude_m, pt.mode, pt.mach, pt.alpha_cmd_deg, pt.p_cmd_deg_s);
        const RunRecord rec = run_scenario(ac, sc, opt);
        pt.outcome = rec.summary.outcome;
        pt.stable = pt.outcome == Outcome::kStable;
      } catch (const std::exception& e) {
        pt.error = e.what();
        std::lock_guard lock(error_mutex);
        point_errors[sequence[i]] = e.what();
      }
    }
  };
  const int n = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < point_errors.size(); ++i)
    if (!point_errors[i].empty()) out.errors.push_back("point " + std::to_string(i) + ": " + point_errors[i]);

  for (double h : cfg.altitudes_m)
    for (GuardMode mode : cfg.modes) out.volumes.push_back(stable_volume(out.points, cfg, h, mode));
  return out;
}

VolumeReport stable_volume(const std::vector<SweepPoint>& points, const SweepConfig& cfg,
                           double altitude_m, GuardMode mode) {
  auto normalize = [](double v, const AxisRange& r) {
    return r.max > r.min ? (v - r.min) / (r.max - r.min) : 0.0;
  };
  VolumeReport rep;
  rep.altitude_m = altitude_m;
  rep.mode = mode;
  std::vector<Vec3> all, positive, negative;
  for (const SweepPoint& pt : points) {
    if (pt.altitude_m != altitude_m || pt.mode != mode) continue;
    ++rep.total_points;
    if (!pt.stable) continue;
    ++rep.stable_points;
    const Vec3 x(normalize(pt.alpha_cmd_deg, cfg.alpha_cmd_deg), normalize(pt.p_cmd_deg_s, cfg.p_cmd_deg_s),
                 normalize(pt.mach, cfg.mach));
    all.push_back(x);
    if (pt.p_cmd_deg_s >= 0.0) positive.push_back(x);
    if (pt.p_cmd_deg_s <= 0.0) negative.push_back(x);
  }
  const ConvexHull hull = convex_hull(all);
  rep.volume = hull.volume;
  rep.degenerate = hull.degenerate;
  rep.volume_positive_p = convex_hull(positive).volume;
  rep.volume_negative_p = convex_hull(negative).volume;
  return rep;
}

double volume_expansion(double lyapunov, double scheduled) {
  if (!(scheduled > 0.0)) return std::nan("");
  return (lyapunov - scheduled) / scheduled;
}

}  // namespace floc
