#include "floc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace floc {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kStable: return "stable";
    case Outcome::kDiverged: return "diverged";
    case Outcome::kGuardTerminated: return "guard-terminated";
  }
  return "diverged";
}

Outcome parse_outcome(const std::string& s) {
  if (s == "stable") return Outcome::kStable;
  if (s == "diverged") return Outcome::kDiverged;
  if (s == "guard-terminated") return Outcome::kGuardTerminated;
  throw ConfigError("unknown outcome '" + s + "'");
}

namespace {

// Everything the loop measures at the start of a step.
struct Sensed {
  DerivativeInfo info;
  Vec2 angle_rates = Vec2::Zero();
  AtmosphereState atm;
  Mat2 G = Mat2::Identity();
  Mat3X phi;
  Vec3 moments = Vec3::Zero();   // C(x, u0)
  Vec3 baseline = Vec3::Zero();  // C(x, u0) - phi u0
  MomentSetPolytope set, shrunk;
  MomentSetPolytope reachable;  // increments up to the position limits
};

Sensed sense(const Aircraft& ac, const AircraftState& x, const VecX& u0_deg, double thrust,
             double gravity, double dt, double authority) {
  Sensed s;
  const std::span<const double> u0(u0_deg.data(), u0_deg.size());
  const StateRate d = state_derivative(ac, x, u0, thrust, gravity, &s.info);
  s.angle_rates = {d.alpha, d.beta};
  s.atm = atmosphere_clamped(x.h);
  s.G = g_matrix(x, ac.airframe, s.atm, s.info.coefficients).G;
  s.phi = control_effectiveness(ac, x, u0);
  const VecX u0_rad = u0_deg * kDegToRad;
  s.moments = s.info.coefficients.moments();
  s.baseline = s.moments - s.phi * u0_rad;
  s.set = build_iams(s.phi, incremental_bounds(u0_rad, ac.effectors, dt));
  s.shrunk = shrink(s.set, authority);
  s.reachable = build_iams(s.phi, {ac.effectors.lower_deg() * kDegToRad - u0_rad,
                                   ac.effectors.upper_deg() * kDegToRad - u0_rad});
  return s;
}

std::string check_divergence(const AircraftState& x, double nz, const DivergenceGuards& g) {
  std::ostringstream why;
  const double max_rate = g.max_rate_deg_s * kDegToRad;
  if (!x.finite()) why << "non-finite state";
  else if (std::abs(x.p) > max_rate || std::abs(x.q) > max_rate || std::abs(x.r) > max_rate)
    why << "body rate beyond " << g.max_rate_deg_s << " deg/s";
  else if (std::abs(x.alpha) > g.max_alpha_deg * kDegToRad)
    why << "angle of attack beyond " << g.max_alpha_deg << " deg";
  else if (x.V < g.min_airspeed) why << "airspeed below " << g.min_airspeed << " m/s";
  else if (std::abs(nz) > g.max_load_factor) why << "load factor beyond " << g.max_load_factor << " g";
  return why.str();
}

}  // namespace

RunRecord run_scenario(const Aircraft& ac, const ManeuverScenario& sc, const RunOptions& options) {
  sc.validate();
  if (sc.guard == GuardMode::kScheduled && !options.schedule)
    throw ConfigError("scenario '" + sc.name + "': scheduled guard needs a limiter schedule");
  const double gravity = kStandardGravity;
  const ControllerConfig& ctl = sc.controller;
  const ControllerGains& gains = ctl.gains;
  const AirframeParameters& af = ac.airframe;

  RunRecord rec;
  rec.scenario = sc.name;
  rec.guard = sc.guard;
  rec.trim = options.trim ? *options.trim : trim_level_flight(ac, sc.mach, sc.altitude_m, gravity);
  for (const auto& s : ac.effectors.surfaces) rec.surface_names.push_back(s.name);

  AircraftState x = rec.trim.state;
  ActuatorState act = rec.trim.actuators;
  const double thrust = rec.trim.thrust;
  const VecX lower = ac.effectors.lower_deg() * kDegToRad;
  const VecX upper = ac.effectors.upper_deg() * kDegToRad;
  const double alpha_trim_deg = rec.trim.state.alpha * kRadToDeg;

  const LyapunovGain K = LyapunovGain::inertia_scaled(af.inertia, ctl.lyapunov_scale);
  Allocator allocator(ctl.allocator);
  Guard guard(ctl.release_delay_s);
  RunSummary& sum = rec.summary;
  sum.duration = sc.duration_s;

  const int steps = static_cast<int>(std::lround(sc.duration_s / sc.dt_s));
  const double dt = sc.dt_s;
  int k = 0;
  for (; k < steps; ++k) {
    const double t = k * dt;
    if (t >= options.stop_at - 1e-12) break;

    Sensed sn;
    try {
      sn = sense(ac, x, act.position_deg, thrust, gravity, dt, ctl.authority_fraction);
    } catch (const NumericError& e) {
      sum.outcome = Outcome::kDiverged;
      sum.reason = e.what();
      break;
    }
    const double nz = sn.info.load_factor;
    if (std::string why = check_divergence(x, nz, sc.divergence); !why.empty()) {
      sum.outcome = Outcome::kGuardTerminated;
      sum.reason = why;
      break;
    }

    PilotCommand pilot{sc.alpha_deg.at(t, alpha_trim_deg) * kDegToRad, sc.beta_deg.at(t, 0.0) * kDegToRad,
                       sc.p_deg_s.at(t, 0.0) * kDegToRad};
    const double qbar = sn.info.dynamic_pressure;
    const Vec2 qr0(x.q, x.r);
    auto rates_for = [&](double alpha_cmd, double p_cmd) {
      const Vec2 qr = outer_loop({alpha_cmd, pilot.beta, p_cmd}, x, sn.angle_rates, qr0, sn.G, gains);
      return RateCommand{p_cmd, qr[0], qr[1]};
    };
    auto demand_for = [&](const RateCommand& r) {
      return inner_loop(r, x, af, qbar, gains, sn.baseline);
    };

    StepRecord step;
    try {
      const RateCommand raw = rates_for(pilot.alpha, pilot.p);
      const MomentDemand raw_demand = demand_for(raw);
      const Vec3 raw_delta = raw_demand.total - sn.moments;
      const Detection det = detect(sn.shrunk, raw_delta);
      if (det.loc_risk && sum.first_loc_risk < 0.0) sum.first_loc_risk = t;

      double alpha_cmd = pilot.alpha;
      RateCommand rates = raw;
      bool guarded = false;
      double blend = 1.0;
      int stage = 0;
      SaturationLimits limits;
      if (sc.guard == GuardMode::kLyapunov) {
        guarded = guard.update(det.loc_risk, t);
        if (guarded) {
          limits = saturation_limits(x, af.inertia, K, gains, sn.angle_rates, sn.G, t);
          const GuardedCommand a = lyapunov_clamp(pilot, raw, limits, x.rates());
          const RateCommand through_alpha = rates_for(a.alpha, pilot.p);
          const GuardedCommand h = lyapunov_clamp({a.alpha, pilot.beta, pilot.p}, through_alpha, limits,
                                                  x.rates());
          alpha_cmd = h.alpha;
          rates = h.rates;
          blend = 0.0;
          stage = 1;
          if (ctl.blend) {
            const Vec3 hard_delta = demand_for(h.rates).total - sn.moments;
            if (const auto span = sn.shrunk.segment_interval(hard_delta, raw_delta)) {
              blend = span->second;
              alpha_cmd = h.alpha + blend * (pilot.alpha - h.alpha);
              const Vec3 w = h.rates.vec() + blend * (raw.vec() - h.rates.vec());
              rates = {w[0], w[1], w[2]};
            } else {
              // The stabilizing demand is out of reach this step: keep its
              // direction and scale it back onto the position-limited set.
              stage = 2;
              const auto reach = sn.reachable.segment_interval(Vec3::Zero(), hard_delta);
              if (reach && reach->second < 1.0) {
                const RateCommand hold = rates_for_moment_coefficients(sn.moments, x, af, qbar, gains);
                const Vec3 w = hold.vec() + reach->second * (h.rates.vec() - hold.vec());
                rates = {w[0], w[1], w[2]};
                alpha_cmd = alpha_saturation(x, sn.angle_rates, qr0, Vec2(w[1], w[2]), sn.G, gains)[0];
              }
            }
          }
        }
      } else if (sc.guard == GuardMode::kScheduled) {
        const double mach = x.V / sn.atm.speed_of_sound;
        const ScheduledLimits lim = scheduled_limits(mach, x.h, *options.schedule);
        const GuardedCommand a = scheduled_clamp(pilot, raw, lim);
        const GuardedCommand h = scheduled_clamp({a.alpha, pilot.beta, pilot.p},
                                                 rates_for(a.alpha, pilot.p), lim);
        alpha_cmd = h.alpha;
        rates = h.rates;
        guarded = a.alpha_clamped || h.rates_clamped;
        limits.alpha = lim.alpha;
        limits.p = lim.p;
        limits.q = lim.q;
        limits.r = lim.r;
        limits.active = guarded;
        limits.time = t;
      }

      const MomentDemand demand = demand_for(rates);
      AllocationProblem prob{sn.phi, demand.control, lower, upper, std::nullopt};
      const AllocationResult alloc = allocator.solve(prob);
      const VecX u0_rad = act.position_deg * kDegToRad;
      const Vec3 allocated = sn.phi * (alloc.u - u0_rad);
      const double tau_norm = demand.control.norm();
      const double rel = alloc.residual / std::max(tau_norm, 1e-12);

      step.t = t;
      step.state = x;
      step.nz = nz;
      step.pilot = pilot;
      step.raw_rates = raw;
      step.guarded_alpha = alpha_cmd;
      step.guarded_rates = rates;
      step.u_deg = act.position_deg;
      step.u_cmd_deg = alloc.u * kRadToDeg;
      step.tau_c = demand.control;
      step.demand = allocated;
      step.relative_residual = rel;
      step.alloc_status = alloc.status;
      step.loc_risk = det.loc_risk;
      step.margin = det.margin;
      step.guard_active = guarded;
      step.blend = blend;
      step.guard_stage = stage;
      step.demand_inside = sn.shrunk.contains(allocated, 1e-9).inside;
      step.limits = limits;

      sum.max_relative_residual = std::max(sum.max_relative_residual, rel);
      if (alloc.status == AllocationStatus::kError) ++sum.allocation_errors;
      if (guarded) ++sum.guarded_steps;
      else if (!step.demand_inside) ++sum.unguarded_outside;
    } catch (const NumericError& e) {
      sum.outcome = Outcome::kDiverged;
      sum.reason = e.what();
      break;
    }

    sum.peak_p = std::max(sum.peak_p, std::abs(x.p));
    sum.peak_q = std::max(sum.peak_q, std::abs(x.q));
    sum.peak_r = std::max(sum.peak_r, std::abs(x.r));
    sum.peak_alpha = std::max(sum.peak_alpha, std::abs(x.alpha));
    sum.peak_nz = std::max(sum.peak_nz, std::abs(nz));
    rec.times.push_back(t);
    rec.rate_norms.push_back(x.rates().norm());

    act = actuator_step(act, std::span<const double>(step.u_cmd_deg.data(), step.u_cmd_deg.size()),
                        ac.effectors, dt);
    if (options.keep_history) rec.history.push_back(std::move(step));
    try {
      x = step_rk4(ac, x, std::span<const double>(act.position_deg.data(), act.position_deg.size()),
                   thrust, dt, gravity);
    } catch (const DivergenceError& e) {
      sum.outcome = Outcome::kDiverged;
      sum.reason = e.what();
      ++k;
      break;
    }
  }
  sum.end_time = k * dt;
  sum.completed = k == steps;
  rec.final_state = x;
  rec.final_actuators = act;
  if (sum.completed) {
    sum.outcome = classify_stability(rec, sc.classification);
    if (sum.outcome != Outcome::kStable) sum.reason = "sustained rate growth in the final window";
  }
  return rec;
}

Outcome classify_stability(const RunRecord& rec, const ClassificationConfig& cfg) {
  const RunSummary& s = rec.summary;
  if (!s.completed) return s.outcome == Outcome::kStable ? Outcome::kDiverged : s.outcome;
  if (rec.times.empty()) return Outcome::kStable;
  const double T = s.duration;
  const double final_start = T * (1.0 - cfg.settle_fraction);
  const double prev_start = T * (1.0 - 2.0 * cfg.settle_fraction);
  double final_peak = 0.0, prev_peak = 0.0;
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    const double w = rec.rate_norms[i];
    if (!std::isfinite(w)) return Outcome::kDiverged;
    if (rec.times[i] >= final_start) final_peak = std::max(final_peak, w);
    else if (rec.times[i] >= prev_start) prev_peak = std::max(prev_peak, w);
  }
  if (final_peak < cfg.rate_floor_deg_s * kDegToRad) return Outcome::kStable;
  return final_peak <= cfg.growth_ratio * prev_peak ? Outcome::kStable : Outcome::kDiverged;
}

AmsSnapshot ams_snapshot(const Aircraft& ac, const ManeuverScenario& sc, double t,
                         const RunOptions& options) {
  if (!(t >= 0.0 && t < sc.duration_s)) throw ConfigError("ams: time outside the scenario");
  RunOptions opt = options;
  opt.keep_history = true;
  opt.stop_at = t + 0.5 * sc.dt_s;
  const RunRecord rec = run_scenario(ac, sc, opt);
  if (rec.history.empty() || rec.history.back().t + 0.5 * sc.dt_s < t)
    throw NumericError("ams: run ended before t = " + std::to_string(t) + " (" + rec.summary.reason + ")");
  const StepRecord& last = rec.history.back();
  const Sensed sn = sense(ac, last.state, last.u_deg, rec.trim.thrust, kStandardGravity, sc.dt_s,
                          sc.controller.authority_fraction);
  AmsSnapshot snap;
  snap.t = last.t;
  snap.set = sn.set;
  snap.shrunk = sn.shrunk;
  snap.demand = last.demand;
  snap.loc_risk = last.loc_risk;
  snap.margin = last.margin;
  return snap;
}

}  // namespace floc
