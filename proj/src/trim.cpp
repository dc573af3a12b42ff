#include "floc/sim.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace floc {

double trim_residual(const StateRate& d, double V) {
  const double dv = d.V / V;
  return std::sqrt(dv * dv + d.alpha * d.alpha + d.beta * d.beta + d.p * d.p + d.q * d.q +
                   d.r * d.r);
}

namespace {

// Deflection pattern producing a pure pitching moment with minimum effort
// at the initial guess; for a symmetric airframe this is a symmetric tail.
VecX pitch_pattern(const Aircraft& ac, const AircraftState& s) {
  const std::vector<double> zero(ac.num_surfaces(), 0.0);
  const Mat3X phi = control_effectiveness(ac, s, zero);
  VecX d = phi.completeOrthogonalDecomposition().pseudoInverse() * Vec3(0.0, -1.0, 0.0);
  if (d.norm() == 0.0) throw TrimError("trim: no pitch control authority", INFINITY);
  d /= d.cwiseAbs().maxCoeff();
  // Tidy numerically-zero entries so symmetric airframes trim exactly symmetric.
  for (auto& v : d) if (std::abs(v) < 1e-9) v = 0.0;
  return d;
}

}  // namespace

TrimResult trim_level_flight(const Aircraft& ac, double mach, double altitude_m, double gravity) {
  if (!(mach >= 0.3 && mach <= 1.2)) throw DomainError("trim: Mach must be in [0.3, 1.2]");
  const AtmosphereState atm = atmosphere(altitude_m);
  const double V = mach * atm.speed_of_sound;
  const double qS = 0.5 * atm.density * V * V * ac.airframe.wing_area;
  const int m = ac.num_surfaces();

  AircraftState s;
  s.V = V;
  s.h = altitude_m;
  const VecX pattern = pitch_pattern(ac, s);

  auto build = [&](const Vec3& x, AircraftState& st, std::vector<double>& u) {
    st = s;
    st.alpha = x[0];
    st.theta = x[0];
    u.resize(m);
    for (int j = 0; j < m; ++j) u[j] = pattern[j] == 0.0 ? 0.0 : pattern[j] * x[1];
  };
  auto residual = [&](const Vec3& x) {
    AircraftState st;
    std::vector<double> u;
    build(x, st, u);
    const StateRate d = state_derivative(ac, st, u, x[2], gravity);
    return Vec3(d.V / V, d.alpha, d.q);
  };

  const double weight = ac.airframe.mass * gravity;
  Vec3 x(2.0 * kDegToRad, 0.0, 0.03 * qS);
  Vec3 f = residual(x);
  const Vec3 steps(1e-6, 1e-4, 1e-6 * weight);
  int it = 0;
  for (; it < 50 && f.norm() > 1e-14; ++it) {
    Mat3 jac;
    for (int k = 0; k < 3; ++k) {
      Vec3 xp = x, xm = x;
      xp[k] += steps[k];
      xm[k] -= steps[k];
      jac.col(k) = (residual(xp) - residual(xm)) / (2.0 * steps[k]);
    }
    const Vec3 dx = jac.fullPivLu().solve(-f);
    double lambda = 1.0;
    Vec3 xn = x + dx, fn = residual(xn);
    while (fn.norm() > f.norm() && lambda > 1e-4) {
      lambda *= 0.5;
      xn = x + lambda * dx;
      fn = residual(xn);
    }
    x = xn;
    f = fn;
  }

  TrimResult out;
  std::vector<double> u;
  build(x, out.state, u);
  out.thrust = x[2];
  out.actuators.position_deg = Eigen::Map<VecX>(u.data(), m);
  out.actuators.command_deg = out.actuators.position_deg;
  out.iterations = it;
  const StateRate d = state_derivative(ac, out.state, u, out.thrust, gravity);
  out.residual = trim_residual(d, V);

  bool in_limits = true;
  for (int j = 0; j < m; ++j) {
    const auto& sf = ac.effectors.surfaces[j];
    in_limits = in_limits && u[j] >= sf.min_deg && u[j] <= sf.max_deg;
  }
  if (!(out.residual < kTrimTolerance) || !in_limits) {
    std::ostringstream msg;
    msg << "trim: no convergence at Mach " << mach << ", " << altitude_m
        << " m (residual " << out.residual << (in_limits ? ")" : ", surfaces beyond limits)");
    throw TrimError(msg.str(), out.residual);
  }
  return out;
}

}  // namespace floc
