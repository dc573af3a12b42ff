#pragma once

#include "floc/alloc.hpp"
#include "floc/guard.hpp"
#include "floc/hull.hpp"
#include "floc/indi.hpp"
#include "floc/moment_set.hpp"
#include "floc/sim.hpp"

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace floc {

/// Piecewise command profile. Before the first knot the profile returns the
/// caller's initial value (the trim value for alpha).
struct Profile {
  enum class Interp { kStep, kLinear };
  struct Knot {
    double t = 0.0;
    double value = 0.0;
  };
  Interp interp = Interp::kStep;
  std::vector<Knot> knots;

  double at(double t, double initial) const;
  /// Times at which the command changes sign, relative to the initial value.
  std::vector<double> reversals(double initial) const;
};

struct ControllerConfig {
  ControllerGains gains;
  double lyapunov_scale = 2.0;      // K = c diag(J) [1/s]
  double authority_fraction = 0.7;  // shrink factor applied to the IAMS
  double release_delay_s = 0.2;
  bool blend = true;  // relax the clamp back toward the raw command while inside the set
  AllocatorOptions allocator;
};

struct ClassificationConfig {
  double settle_fraction = 0.25;  // final window checked for growth
  double growth_ratio = 1.5;      // final-window peak / preceding-window peak
  double rate_floor_deg_s = 5.0;  // rate norms below this never count as growth
};

struct ManeuverScenario {
  std::string name = "scenario";
  std::filesystem::path aircraft_file;
  std::filesystem::path schedule_file;  // optional
  double mach = 0.8;
  double altitude_m = 0.0;
  double cg = 0.35;
  double duration_s = 10.0;
  double dt_s = 0.01;
  GuardMode guard = GuardMode::kOff;
  Profile alpha_deg, beta_deg, p_deg_s;
  ControllerConfig controller;
  ClassificationConfig classification;
  DivergenceGuards divergence;

  void validate() const;
};

enum class Outcome { kStable, kDiverged, kGuardTerminated };
std::string to_string(Outcome o);
Outcome parse_outcome(const std::string& s);

struct StepRecord {
  double t = 0.0;
  AircraftState state;
  double nz = 0.0;
  PilotCommand pilot;        // [rad], [rad/s]
  RateCommand raw_rates;     // before the guard
  double guarded_alpha = 0.0;
  RateCommand guarded_rates;
  VecX u_cmd_deg, u_deg;
  Vec3 tau_c = Vec3::Zero();
  Vec3 demand = Vec3::Zero();  // incremental demand actually allocated
  double relative_residual = 0.0;
  AllocationStatus alloc_status = AllocationStatus::kExact;
  bool loc_risk = false;
  double margin = 0.0;
  bool guard_active = false;
  double blend = 1.0;
  int guard_stage = 0;  // 0 raw, 1 blended toward raw, 2 scaled onto the reachable set
  bool demand_inside = true;  // allocated demand inside the shrunk set
  SaturationLimits limits;
};

struct RunSummary {
  Outcome outcome = Outcome::kStable;
  std::string reason;
  double end_time = 0.0;
  double duration = 0.0;
  bool completed = false;
  double peak_p = 0.0, peak_q = 0.0, peak_r = 0.0;  // [rad/s]
  double peak_alpha = 0.0;
  double peak_nz = 0.0;
  double max_relative_residual = 0.0;  // over all steps
  double first_loc_risk = -1.0;
  int guarded_steps = 0;
  int unguarded_outside = 0;  // non-guarded steps whose demand left the shrunk set
  int allocation_errors = 0;
};

struct RunRecord {
  std::string scenario;
  GuardMode guard = GuardMode::kOff;
  TrimResult trim;
  std::vector<std::string> surface_names;
  std::vector<StepRecord> history;  // empty when history is not kept
  std::vector<double> times;        // always kept, for classification
  std::vector<double> rate_norms;
  AircraftState final_state;
  ActuatorState final_actuators;
  RunSummary summary;
};

struct RunOptions {
  bool keep_history = true;
  const LimiterSchedule* schedule = nullptr;  // required for scheduled mode
  const TrimResult* trim = nullptr;           // reuse a trim solved elsewhere
  double stop_at = std::numeric_limits<double>::infinity();  // `ams` snapshots
};

/// The full closed loop from trim to the end of the profile.
RunRecord run_scenario(const Aircraft& ac, const ManeuverScenario& scenario,
                       const RunOptions& options = {});

Outcome classify_stability(const RunRecord& record, const ClassificationConfig& config);

/// IAMS at the state reached at time `t` along the scenario.
struct AmsSnapshot {
  double t = 0.0;
  MomentSetPolytope set, shrunk;
  Vec3 demand = Vec3::Zero();
  bool loc_risk = false;
  double margin = 0.0;
};
AmsSnapshot ams_snapshot(const Aircraft& ac, const ManeuverScenario& scenario, double t,
                         const RunOptions& options = {});

// ---- sweeps ----

struct AxisRange {
  double min = 0.0, max = 0.0;
  int count = 1;
  std::vector<double> values() const;
};

struct SweepConfig {
  std::filesystem::path aircraft_file;
  std::filesystem::path schedule_file;
  double cg = 0.35;
  std::vector<double> altitudes_m{0.0, 3048.0};
  AxisRange mach{0.6, 1.0, 5};
  AxisRange alpha_cmd_deg{0.0, 30.0, 21};
  AxisRange p_cmd_deg_s{-210.0, 210.0, 29};
  std::vector<GuardMode> modes{GuardMode::kLyapunov, GuardMode::kScheduled};
  double step_time_s = 1.0;
  double duration_s = 6.0;
  double dt_s = 0.01;
  ControllerConfig controller;
  ClassificationConfig classification;
  DivergenceGuards divergence;

  void validate() const;
  std::size_t cases_per_altitude() const;
};

struct SweepPoint {
  double altitude_m = 0.0;
  GuardMode mode = GuardMode::kOff;
  double mach = 0.0;
  double alpha_cmd_deg = 0.0;
  double p_cmd_deg_s = 0.0;
  Outcome outcome = Outcome::kDiverged;
  bool stable = false;
  std::string error;  // non-empty when the point could not be run
};

struct VolumeReport {
  double altitude_m = 0.0;
  GuardMode mode = GuardMode::kOff;
  std::size_t stable_points = 0;
  std::size_t total_points = 0;
  double volume = 0.0;           // unit-cube normalized
  double volume_positive_p = 0.0;  // stable points with p_cmd >= 0
  double volume_negative_p = 0.0;  // stable points with p_cmd <= 0
  bool degenerate = false;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // grid order: altitude, mode, mach, alpha, p
  std::vector<VolumeReport> volumes;
  std::vector<std::string> errors;
};

/// Scenario executed at one grid point: trim then alpha/p steps at step time.
ManeuverScenario sweep_case(const SweepConfig& cfg, double altitude_m, GuardMode mode, double mach,
                            double alpha_cmd_deg, double p_cmd_deg_s);

/// Runs every grid point on `jobs` workers. `order` optionally permutes
/// execution; the returned grid is independent of it.
SweepResult monte_carlo_sweep(const Aircraft& ac, const SweepConfig& cfg,
                              const LimiterSchedule* schedule, int jobs = 1,
                              const std::vector<std::size_t>* order = nullptr);

/// Unit-cube normalized hull of the stable points of one (altitude, mode) slice.
VolumeReport stable_volume(const std::vector<SweepPoint>& points, const SweepConfig& cfg,
                           double altitude_m, GuardMode mode);

/// (V_lyap - V_sched) / V_sched; NaN when the scheduled volume is zero.
double volume_expansion(double lyapunov, double scheduled);

// ---- configuration files ----

ManeuverScenario load_scenario(const std::filesystem::path& path);
SweepConfig load_sweep(const std::filesystem::path& path);
LimiterSchedule load_limiter_schedule(const std::filesystem::path& path);
/// Aircraft with the scenario CG applied.
Aircraft load_vehicle(const std::filesystem::path& aircraft_file, double cg);

// ---- exports ----

void write_run_csv(const RunRecord& record, const std::filesystem::path& path);
void write_run_summary(const RunRecord& record, const std::filesystem::path& path);
void write_sweep_grid(const SweepResult& result, const std::filesystem::path& path);
std::vector<SweepPoint> read_sweep_grid(const std::filesystem::path& path);
void write_sweep_summary(const SweepResult& result, const SweepConfig& cfg,
                         const std::filesystem::path& path);
void write_ams_snapshot(const AmsSnapshot& snap, const std::filesystem::path& path);
std::string trim_report(const Aircraft& ac, const TrimResult& trim);

}  // namespace floc
