#pragma once

#include "floc/airframe.hpp"
#include "floc/state.hpp"

#include <functional>
#include <span>
#include <string>

namespace floc {

struct ActuatorState {
  VecX position_deg;  // u0
  VecX command_deg;
};

struct DivergenceGuards {
  double max_rate_deg_s = 2000.0;
  double max_alpha_deg = 90.0;
  double max_load_factor = 1e9;  // disabled by default
  double min_airspeed = 1.0;
};

struct SimConfig {
  double dt = 0.01;
  double duration = 10.0;
  std::string integrator = "rk4";
  double gravity = kStandardGravity;
  DivergenceGuards guards;

  void validate() const;
};

/// Diagnostics produced alongside the state derivative.
struct DerivativeInfo {
  AeroCoefficients coefficients;
  double dynamic_pressure = 0.0;
  double load_factor = 0.0;  // n_z [g], positive for upward normal force
  Vec3 moment = Vec3::Zero();  // aerodynamic moment about CG [N m]
};

/// Thrown when the dynamics produce a non-finite value.
struct DivergenceError : NumericError {
  DivergenceError(const std::string& what, AircraftState last)
      : NumericError(what), last_valid(last) {}
  AircraftState last_valid;
};

/// 6-DOF rigid-body equations of motion in wind-axis form.
StateRate state_derivative(const Aircraft& ac, const AircraftState& s, std::span<const double> u_deg,
                           double thrust, double gravity = kStandardGravity,
                           DerivativeInfo* info = nullptr);

/// Rigid-body response to an explicit body moment, used by the rotational
/// fixtures and the aerodynamic path alike: J w' = M - w x J w.
Vec3 rotational_acceleration(const Mat3& inertia, const Vec3& omega, const Vec3& moment);

/// Lagged, rate-limited and position-limited actuator update over one step.
ActuatorState actuator_step(const ActuatorState& act, std::span<const double> u_cmd_deg,
                            const EffectorSuite& suite, double dt);

/// Classic fourth-order Runge-Kutta on a generic autonomous system.
template <typename Vector, typename Rhs>
Vector rk4_step(const Vector& x, double dt, Rhs&& f) {
  const Vector k1 = f(x);
  const Vector k2 = f(Vector(x + 0.5 * dt * k1));
  const Vector k3 = f(Vector(x + 0.5 * dt * k2));
  const Vector k4 = f(Vector(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One RK4 step of the aircraft with deflections held over the step.
AircraftState step_rk4(const Aircraft& ac, const AircraftState& s, std::span<const double> u_deg,
                       double thrust, double dt, double gravity = kStandardGravity);

struct TrimResult {
  AircraftState state;
  ActuatorState actuators;
  double thrust = 0.0;
  double residual = 0.0;  // weighted norm of (V', alpha', beta', p', q', r')
  int iterations = 0;
};

struct TrimError : std::runtime_error {
  TrimError(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

inline constexpr double kTrimTolerance = 1e-8;

/// Wings-level, zero-sideslip steady level flight at the given Mach and altitude.
TrimResult trim_level_flight(const Aircraft& ac, double mach, double altitude_m,
                             double gravity = kStandardGravity);

/// Weighted residual used by the trim contract: V'/V and the angular terms.
double trim_residual(const StateRate& d, double V);

}  // namespace floc
