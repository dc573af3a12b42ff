#include "floc/guard.hpp"

#include <algorithm>
#include <cmath>

namespace floc {

GuardMode parse_guard_mode(const std::string& name) {
  if (name == "off") return GuardMode::kOff;
  if (name == "lyapunov") return GuardMode::kLyapunov;
  if (name == "scheduled") return GuardMode::kScheduled;
  throw ConfigError("unknown guard mode '" + name + "' (expected off, lyapunov or scheduled)");
}

std::string to_string(GuardMode mode) {
  switch (mode) {
    case GuardMode::kOff: return "off";
    case GuardMode::kLyapunov: return "lyapunov";
    case GuardMode::kScheduled: return "scheduled";
  }
  return "off";
}

LyapunovGain LyapunovGain::inertia_scaled(const Mat3& inertia, double c) {
  LyapunovGain g;
  g.K = (c * inertia.diagonal()).asDiagonal();
  return g;
}

void LyapunovGain::validate() const {
  if (!K.allFinite() || (K - K.transpose()).norm() > 1e-12 * K.norm())
    throw ConfigError("lyapunov gain: K must be symmetric");
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(K);
  if (!(eig.eigenvalues().minCoeff() > 0.0))
    throw ConfigError("lyapunov gain: K must be positive definite");
}

Detection detect(const MomentSetPolytope& shrunk_set, const Vec3& incremental_demand) {
  const Containment c = shrunk_set.contains(incremental_demand);
  return {!c.inside, c.margin};
}

Vec3 stabilizing_moments(const Vec3& omega, const LyapunovGain& gain) { return -gain.K * omega; }

Vec3 rate_saturation(const Vec3& omega, const Mat3& inertia, const LyapunovGain& gain,
                     const ControllerGains& gains) {
  const Vec3 accel =
      inertia.ldlt().solve(stabilizing_moments(omega, gain) - omega.cross(inertia * omega));
  return accel.cwiseQuotient(gains.rates()) + omega;
}

Vec2 alpha_saturation(const AircraftState& s, const Vec2& angle_rates0, const Vec2& qr0,
                      const Vec2& qr_sat, const Mat2& G, const ControllerGains& gains) {
  if (!(std::abs(G.determinant()) >= kSingularDeterminant))
    throw SingularGError("alpha_saturation: singular G");
  const Vec2 nu = angle_rates0 + G * (qr_sat - qr0);
  return nu.cwiseQuotient(gains.angles()) + Vec2(s.alpha, s.beta);
}

SaturationLimits saturation_limits(const AircraftState& s, const Mat3& inertia,
                                   const LyapunovGain& gain, const ControllerGains& gains,
                                   const Vec2& angle_rates0, const Mat2& G, double time) {
  const Vec3 omega = s.rates();
  const Vec3 rates = rate_saturation(omega, inertia, gain, gains);
  const Vec2 angles = alpha_saturation(s, angle_rates0, Vec2(s.q, s.r), Vec2(rates[1], rates[2]), G,
                                       gains);
  SaturationLimits out;
  out.p = rates[0];
  out.q = rates[1];
  out.r = rates[2];
  out.alpha = angles[0];
  out.beta = angles[1];
  out.active = true;
  out.time = time;
  return out;
}

void LimiterSchedule::validate() const {
  const auto nm = static_cast<Eigen::Index>(mach.size());
  const auto nh = static_cast<Eigen::Index>(altitude_m.size());
  if (nm == 0 || nh == 0) throw ConfigError("limiter schedule: empty table");
  for (const auto* t : {&max_alpha_deg, &max_p_deg_s, &max_q_deg_s, &max_r_deg_s}) {
    if (t->rows() != nh || t->cols() != nm)
      throw ConfigError("limiter schedule: table shape must be altitude x mach");
    if (!(t->minCoeff() > 0.0)) throw ConfigError("limiter schedule: limits must be positive");
  }
  if (!std::is_sorted(mach.begin(), mach.end()) || !std::is_sorted(altitude_m.begin(), altitude_m.end()))
    throw ConfigError("limiter schedule: breakpoints must be increasing");
  if (std::adjacent_find(mach.begin(), mach.end()) != mach.end() ||
      std::adjacent_find(altitude_m.begin(), altitude_m.end()) != altitude_m.end())
    throw ConfigError("limiter schedule: duplicate breakpoint");
}

namespace {

// Bracketing index and fraction for a clamped lookup.
std::pair<Eigen::Index, double> bracket(const std::vector<double>& axis, double x) {
  const auto n = static_cast<Eigen::Index>(axis.size());
  if (n == 1 || x <= axis.front()) return {0, 0.0};
  if (x >= axis.back()) return {n - 2, 1.0};
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  const auto i = static_cast<Eigen::Index>(it - axis.begin()) - 1;
  return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
}

double bilinear(const Eigen::MatrixXd& t, std::pair<Eigen::Index, double> row,
                std::pair<Eigen::Index, double> col) {
  const auto [i, fi] = row;
  const auto [j, fj] = col;
  const auto i1 = std::min<Eigen::Index>(i + 1, t.rows() - 1);
  const auto j1 = std::min<Eigen::Index>(j + 1, t.cols() - 1);
  return (1 - fi) * ((1 - fj) * t(i, j) + fj * t(i, j1)) + fi * ((1 - fj) * t(i1, j) + fj * t(i1, j1));
}

double clamp_one_sided(double cmd, double sat, double direction, bool& clamped) {
  if (!std::isfinite(sat)) return cmd;
  if (direction * (cmd - sat) > 0.0) {
    clamped = true;
    return sat;
  }
  return cmd;
}

}  // namespace

ScheduledLimits scheduled_limits(double mach, double altitude_m, const LimiterSchedule& schedule) {
  schedule.validate();
  const auto row = bracket(schedule.altitude_m, altitude_m);
  const auto col = bracket(schedule.mach, mach);
  ScheduledLimits out;
  out.alpha = bilinear(schedule.max_alpha_deg, row, col) * kDegToRad;
  out.p = bilinear(schedule.max_p_deg_s, row, col) * kDegToRad;
  out.q = bilinear(schedule.max_q_deg_s, row, col) * kDegToRad;
  out.r = bilinear(schedule.max_r_deg_s, row, col) * kDegToRad;
  return out;
}

GuardedCommand lyapunov_clamp(const PilotCommand& cmd, const RateCommand& rates,
                              const SaturationLimits& limits, const Vec3& omega, double blend) {
  GuardedCommand out;
  out.beta = cmd.beta;
  // Increasing alpha is the departing direction for the angle channel.
  out.alpha = clamp_one_sided(cmd.alpha, limits.alpha, 1.0, out.alpha_clamped);
  const Vec3 raw = rates.vec();
  const Vec3 sat(limits.p, limits.q, limits.r);
  Vec3 guarded = raw;
  for (int k = 0; k < 3; ++k) {
    // Commands beyond the stabilizing value, in the sense of the current
    // rate, would grow |w|. At zero rate any excess beyond sat is clamped.
    double dir = omega[k] > 0.0 ? 1.0 : (omega[k] < 0.0 ? -1.0 : 0.0);
    if (dir == 0.0) dir = raw[k] > sat[k] ? 1.0 : -1.0;
    guarded[k] = clamp_one_sided(raw[k], sat[k], dir, out.rates_clamped);
  }
  const double s = std::clamp(blend, 0.0, 1.0);
  out.alpha += s * (cmd.alpha - out.alpha);
  guarded += s * (raw - guarded);
  out.rates = {guarded[0], guarded[1], guarded[2]};
  return out;
}

GuardedCommand scheduled_clamp(const PilotCommand& cmd, const RateCommand& rates,
                               const ScheduledLimits& limits) {
  GuardedCommand out;
  out.beta = cmd.beta;
  out.alpha = std::clamp(cmd.alpha, -limits.alpha, limits.alpha);
  out.alpha_clamped = out.alpha != cmd.alpha;
  out.rates = {std::clamp(rates.p, -limits.p, limits.p), std::clamp(rates.q, -limits.q, limits.q),
               std::clamp(rates.r, -limits.r, limits.r)};
  out.rates_clamped = out.rates.vec() != rates.vec();
  return out;
}

GuardedCommand apply_guard(const PilotCommand& cmd, const RateCommand& rates,
                           const SaturationLimits& limits, bool loc_risk, GuardMode mode,
                           const Vec3& omega, const ScheduledLimits* schedule) {
  switch (mode) {
    case GuardMode::kLyapunov:
      if (loc_risk) return lyapunov_clamp(cmd, rates, limits, omega);
      break;
    case GuardMode::kScheduled:
      if (!schedule) throw ConfigError("apply_guard: scheduled mode needs limits");
      return scheduled_clamp(cmd, rates, *schedule);
    case GuardMode::kOff:
      break;
  }
  GuardedCommand out;
  out.alpha = cmd.alpha;
  out.beta = cmd.beta;
  out.rates = rates;
  return out;
}

bool Guard::update(bool loc_risk, double time) {
  if (loc_risk) {
    active_ = true;
    last_risk_ = time;
  } else if (active_ && time - last_risk_ >= delay_ - 1e-12) {
    active_ = false;
  }
  return active_;
}

}  // namespace floc
