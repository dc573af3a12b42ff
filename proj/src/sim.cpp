#include "floc/sim.hpp"

#include <algorithm>
#include <cmath>

namespace floc {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("sim: dt must be > 0");
  if (!(duration >= dt)) throw ConfigError("sim: duration must be >= dt");
  if (integrator != "rk4") throw ConfigError("sim: unsupported integrator '" + integrator + "'");
}

Vec3 rotational_acceleration(const Mat3& inertia, const Vec3& omega, const Vec3& moment) {
  return inertia.llt().solve(moment - omega.cross(inertia * omega));
}

StateRate state_derivative(const Aircraft& ac, const AircraftState& s, std::span<const double> u_deg,
                           double thrust, double gravity, DerivativeInfo* info) {
  const auto& af = ac.airframe;
  const AtmosphereState atm = atmosphere_clamped(s.h);
  const AeroCoefficients c = aero_coefficients(ac, s, u_deg);
  const double qbar = 0.5 * atm.density * s.V * s.V;
  const double qS = qbar * af.wing_area;

  const double ca = std::cos(s.alpha), sa = std::sin(s.alpha);
  const double cb = std::cos(s.beta), sb = std::sin(s.beta);
  const double sphi = std::sin(s.phi), cphi = std::cos(s.phi);
  const double sth = std::sin(s.theta), cth = std::cos(s.theta);
  const double spsi = std::sin(s.psi), cpsi = std::cos(s.psi);

  // Body-axis aerodynamic force coefficients from wind-axis CD, CY, CL.
  const double CX = -c.CD * ca * cb - c.CY * ca * sb + c.CL * sa;
  const double CYb = -c.CD * sb + c.CY * cb;
  const double CZ = -c.CD * sa * cb - c.CY * sa * sb - c.CL * ca;

  const double u = s.V * ca * cb, v = s.V * sb, w = s.V * sa * cb;
  const double m = af.mass;
  const double ax = (qS * CX + thrust) / m - gravity * sth;
  const double ay = qS * CYb / m + gravity * sphi * cth;
  const double az = qS * CZ / m + gravity * cphi * cth;
  const double udot = s.r * v - s.q * w + ax;
  const double vdot = s.p * w - s.r * u + ay;
  const double wdot = s.q * u - s.p * v + az;

  StateRate d;
  d.V = (u * udot + v * vdot + w * wdot) / s.V;
  d.alpha = (u * wdot - w * udot) / (u * u + w * w);
  d.beta = (s.V * vdot - v * d.V) / (s.V * s.V * cb);

  const Vec3 omega(s.p, s.q, s.r);
  const Vec3 moment(qS * af.span * c.Cl, qS * af.chord * c.Cm, qS * af.span * c.Cn);
  const Vec3 omega_dot = rotational_acceleration(af.inertia, omega, moment);
  d.p = omega_dot[0];
  d.q = omega_dot[1];
  d.r = omega_dot[2];

  d.phi = s.p + std::tan(s.theta) * (s.q * sphi + s.r * cphi);
  d.theta = s.q * cphi - s.r * sphi;
  d.psi = (s.q * sphi + s.r * cphi) / cth;

  d.north = u * cth * cpsi + v * (sphi * sth * cpsi - cphi * spsi) +
            w * (cphi * sth * cpsi + sphi * spsi);
  d.east = u * cth * spsi + v * (sphi * sth * spsi + cphi * cpsi) +
           w * (cphi * sth * spsi - sphi * cpsi);
  d.h = u * sth - v * sphi * cth - w * cphi * cth;

  if (info) {
    info->coefficients = c;
    info->dynamic_pressure = qbar;
    info->load_factor = -qS * CZ / (m * gravity);
    info->moment = moment;
  }
  if (!d.finite()) throw DivergenceError("state_derivative: non-finite derivative", s);
  return d;
}

ActuatorState actuator_step(const ActuatorState& act, std::span<const double> u_cmd_deg,
                            const EffectorSuite& suite, double dt) {
  ActuatorState out = act;
  const int m = suite.size();
  out.command_deg = Eigen::Map<const VecX>(u_cmd_deg.data(), m);
  for (int j = 0; j < m; ++j) {
    const auto& s = suite.surfaces[j];
    const double u = act.position_deg[j];
    const double target = std::clamp(u_cmd_deg[j], s.min_deg, s.max_deg);
    const double desired = s.lag_s > 0.0 ? u + (target - u) * (1.0 - std::exp(-dt / s.lag_s)) : target;
    const double max_step = s.rate_deg_s * dt;
    const double du = std::clamp(desired - u, -max_step, max_step);
    out.position_deg[j] = std::clamp(u + du, s.min_deg, s.max_deg);
  }
  return out;
}

AircraftState step_rk4(const Aircraft& ac, const AircraftState& s, std::span<const double> u_deg,
                       double thrust, double dt, double gravity) {
  using V = AircraftState::Vector;
  const V next = rk4_step<V>(s.to_vector(), dt, [&](const V& x) {
    return state_derivative(ac, AircraftState::from_vector(x), u_deg, thrust, gravity).to_vector();
  });
  AircraftState out = AircraftState::from_vector(next);
  if (!out.finite()) throw DivergenceError("step_rk4: non-finite state", s);
  wrap_attitude(out);
  return out;
}

}  // namespace floc
