// Command-line entry point: trim, simulate, sweep and ams.
#include "floc/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <thread>

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kTrimFailure = 3;
constexpr int kIoError = 4;

std::filesystem::path default_aircraft() { return std::filesystem::path(FLOC_DATA_DIR) / "f16_surrogate.json"; }

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace floc;
  CLI::App app{"Flight simulation with loss-of-control detection and prevention"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string guard_name;
  std::filesystem::path out_dir = "out";
  int seed = 0;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--guard", guard_name, "Guard mode override: off, lyapunov or scheduled")
      ->check(CLI::IsMember({"off", "lyapunov", "scheduled"}));
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Reserved; sweeps are grid-deterministic");
  app.add_option("--jobs", jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);

  auto* trim_cmd = app.add_subcommand("trim", "Print the level-flight trim solution");
  std::filesystem::path trim_scenario, aircraft = default_aircraft();
  double mach = 0.8, altitude = 2000.0, cg = 0.35;
  trim_cmd->add_option("scenario", trim_scenario, "Scenario file supplying the flight condition");
  trim_cmd->add_option("--aircraft", aircraft, "Aircraft data file");
  trim_cmd->add_option("--mach", mach, "Mach number");
  trim_cmd->add_option("--altitude", altitude, "Geometric altitude [m]");
  trim_cmd->add_option("--cg", cg, "CG position as a fraction of the mean chord");

  auto* sim_cmd = app.add_subcommand("simulate", "Run one scenario");
  std::filesystem::path scenario_file;
  sim_cmd->add_option("scenario", scenario_file, "Scenario file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Run an envelope sweep and compare guard modes");
  std::filesystem::path sweep_file;
  sweep_cmd->add_option("sweep", sweep_file, "Sweep file")->required();

  auto* ams_cmd = app.add_subcommand("ams", "Dump the attainable moment set at a time");
  double at = 0.0;
  ams_cmd->add_option("scenario", scenario_file, "Scenario file")->required();
  ams_cmd->add_option("--at", at, "Time [s]")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    auto prepare = [&](ManeuverScenario& sc, LimiterSchedule& schedule, bool& have_schedule) {
      if (!guard_name.empty()) sc.guard = parse_guard_mode(guard_name);
      have_schedule = !sc.schedule_file.empty();
      if (have_schedule) schedule = load_limiter_schedule(sc.schedule_file);
      return load_vehicle(sc.aircraft_file, sc.cg);
    };

    if (*trim_cmd) {
      if (!trim_scenario.empty()) {
        const ManeuverScenario sc = load_scenario(trim_scenario);
        aircraft = sc.aircraft_file;
        mach = sc.mach;
        altitude = sc.altitude_m;
        cg = sc.cg;
      }
      const Aircraft ac = load_vehicle(aircraft, cg);
      std::cout << trim_report(ac, trim_level_flight(ac, mach, altitude));
    } else if (*sim_cmd) {
      ManeuverScenario sc = load_scenario(scenario_file);
      LimiterSchedule schedule;
      bool have_schedule = false;
      const Aircraft ac = prepare(sc, schedule, have_schedule);
      RunOptions opt;
      opt.schedule = have_schedule ? &schedule : nullptr;
      const auto t0 = std::chrono::steady_clock::now();
      const RunRecord rec = run_scenario(ac, sc, opt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const std::string stem = sc.name + "_" + to_string(sc.guard);
      write_run_csv(rec, out_dir / (stem + ".csv"));
      write_run_summary(rec, out_dir / (stem + "_summary.json"));
      const RunSummary& s = rec.summary;
      std::printf("%s guard=%s outcome=%s end=%.2fs peak|p|=%.1fdeg/s peak|alpha|=%.1fdeg "
                  "first_loc_risk=%.2fs max_rel_residual=%.2e (%.2fs wall)\n",
                  sc.name.c_str(), to_string(sc.guard).c_str(), to_string(s.outcome).c_str(), s.end_time,
                  s.peak_p * kRadToDeg, s.peak_alpha * kRadToDeg, s.first_loc_risk, s.max_relative_residual,
                  secs);
      if (!s.reason.empty()) std::printf("  %s\n", s.reason.c_str());
      std::printf("  wrote %s\n", (out_dir / (stem + ".csv")).string().c_str());
    } else if (*sweep_cmd) {
      SweepConfig cfg = load_sweep(sweep_file);
      if (!guard_name.empty()) cfg.modes = {parse_guard_mode(guard_name)};
      LimiterSchedule schedule;
      const bool have_schedule = !cfg.schedule_file.empty();
      if (have_schedule) schedule = load_limiter_schedule(cfg.schedule_file);
      const Aircraft ac = load_vehicle(cfg.aircraft_file, cfg.cg);
      const auto t0 = std::chrono::steady_clock::now();
      const SweepResult res = monte_carlo_sweep(ac, cfg, have_schedule ? &schedule : nullptr, jobs);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_sweep_grid(res, out_dir / "sweep_grid.csv");
      write_sweep_summary(res, cfg, out_dir / "sweep_summary.json");
      std::printf("%zu cases (%zu per altitude per mode) in %.1fs\n", res.points.size(),
                  cfg.cases_per_altitude(), secs);
      for (const VolumeReport& v : res.volumes)
        std::printf("  %7.0f m  %-9s stable %zu/%zu  volume %.4f uc  (p>=0 %.4f, p<=0 %.4f)\n", v.altitude_m,
                    to_string(v.mode).c_str(), v.stable_points, v.total_points, v.volume, v.volume_positive_p,
                    v.volume_negative_p);
      for (double h : cfg.altitudes_m) {
        double vl = -1, vs = -1;
        for (const VolumeReport& v : res.volumes) {
          if (v.altitude_m != h) continue;
          if (v.mode == GuardMode::kLyapunov) vl = v.volume;
          if (v.mode == GuardMode::kScheduled) vs = v.volume;
        }
        if (vl >= 0 && vs >= 0)
          std::printf("  %7.0f m  expansion %.2f%%\n", h, 100.0 * volume_expansion(vl, vs));
      }
      if (!res.errors.empty()) std::printf("  %zu errors, see sweep_summary.json\n", res.errors.size());
    } else if (*ams_cmd) {
      ManeuverScenario sc = load_scenario(scenario_file);
      LimiterSchedule schedule;
      bool have_schedule = false;
      const Aircraft ac = prepare(sc, schedule, have_schedule);
      RunOptions opt;
      opt.schedule = have_schedule ? &schedule : nullptr;
      const AmsSnapshot snap = ams_snapshot(ac, sc, at, opt);
      const auto path = out_dir / (sc.name + "_ams_" + time_tag(snap.t) + ".json");
      write_ams_snapshot(snap, path);
      std::printf("t=%.3fs volume %.4e (shrunk %.4e) loc_risk=%d margin=%.4f\n  wrote %s\n", snap.t,
                  snap.set.volume(), snap.shrunk.volume(), int(snap.loc_risk), snap.margin,
                  path.string().c_str());
    }
  } catch (const TrimError& e) {
    std::cerr << "trim failure: " << e.what() << '\n';
    return kTrimFailure;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
