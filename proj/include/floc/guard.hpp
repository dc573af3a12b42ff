#pragma once

#include "floc/indi.hpp"
#include "floc/moment_set.hpp"

#include <limits>
#include <string>
#include <vector>

namespace floc {

enum class GuardMode { kOff, kLyapunov, kScheduled };

GuardMode parse_guard_mode(const std::string& name);  // ConfigError on unknown names
std::string to_string(GuardMode mode);

/// Weight of the rate Lyapunov function; stabilizing moments are M = -K w.
struct LyapunovGain {
  Mat3 K = Mat3::Identity();

  /// K = c * diag(J).
  static LyapunovGain inertia_scaled(const Mat3& inertia, double c = 2.0);
  /// Throws ConfigError unless K is symmetric positive definite.
  void validate() const;
};

struct SaturationLimits {
  static constexpr double kNone = std::numeric_limits<double>::infinity();
  double p = kNone, q = kNone, r = kNone;  // [rad/s]
  double alpha = kNone;                    // [rad]
  double beta = kNone;                     // computed, never applied
  bool active = false;
  double time = 0.0;
};

struct Detection {
  bool loc_risk = false;
  double margin = 0.0;
};

Detection detect(const MomentSetPolytope& shrunk_set, const Vec3& incremental_demand);

Vec3 stabilizing_moments(const Vec3& omega, const LyapunovGain& gain);

/// Rate commands whose inner-loop response produces -K w:
/// {J^-1 (-K w - w x J w)} ./ (w_p, w_q, w_r) + w.
Vec3 rate_saturation(const Vec3& omega, const Mat3& inertia, const LyapunovGain& gain,
                     const ControllerGains& gains);

/// (alpha, beta) commands whose outer-loop response yields (q_sat, r_sat):
/// {(alpha', beta')_0 + G (qr_sat - qr_0)} ./ (w_alpha, w_beta) + (alpha, beta).
Vec2 alpha_saturation(const AircraftState& s, const Vec2& angle_rates0, const Vec2& qr0,
                      const Vec2& qr_sat, const Mat2& G, const ControllerGains& gains);

/// Saturation values at the current state, marked active.
SaturationLimits saturation_limits(const AircraftState& s, const Mat3& inertia,
                                   const LyapunovGain& gain, const ControllerGains& gains,
                                   const Vec2& angle_rates0, const Mat2& G, double time);

/// Baseline limiter tables; rows follow `altitude_m`, columns follow `mach`.
struct LimiterSchedule {
  std::vector<double> mach;
  std::vector<double> altitude_m;
  Eigen::MatrixXd max_alpha_deg, max_p_deg_s, max_q_deg_s, max_r_deg_s;

  void validate() const;
};

struct ScheduledLimits {
  double alpha = 0.0, p = 0.0, q = 0.0, r = 0.0;  // [rad], [rad/s]
};

/// Bilinear interpolation in (Mach, altitude), clamped to the table edges.
ScheduledLimits scheduled_limits(double mach, double altitude_m, const LimiterSchedule& schedule);

struct GuardedCommand {
  double alpha = 0.0;  // [rad]
  double beta = 0.0;
  RateCommand rates;
  bool alpha_clamped = false;
  bool rates_clamped = false;
};

/// One-sided clamp of alpha and the body-rate commands toward the
/// stabilizing values. With `blend` > 0 the result moves back toward the raw
/// command by that fraction (0 gives the clamp itself).
GuardedCommand lyapunov_clamp(const PilotCommand& cmd, const RateCommand& rates,
                              const SaturationLimits& limits, const Vec3& omega, double blend = 0.0);

/// Symmetric clamp to the scheduled limits.
GuardedCommand scheduled_clamp(const PilotCommand& cmd, const RateCommand& rates,
                               const ScheduledLimits& limits);

/// Mode dispatch for a single step. Off passes through, lyapunov clamps only
/// while `loc_risk`, scheduled always clamps.
GuardedCommand apply_guard(const PilotCommand& cmd, const RateCommand& rates,
                           const SaturationLimits& limits, bool loc_risk, GuardMode mode,
                           const Vec3& omega, const ScheduledLimits* schedule = nullptr);

/// Detection latch with a release delay.
class Guard {
 public:
  explicit Guard(double release_delay_s = 0.2) : delay_(release_delay_s) {}
  bool update(bool loc_risk, double time);
  bool active() const { return active_; }
  void reset() { active_ = false; }

 private:
  double delay_;
  bool active_ = false;
  double last_risk_ = 0.0;
};

}  // namespace floc
