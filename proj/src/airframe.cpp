#include "floc/airframe.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace floc {

AircraftState::Vector AircraftState::to_vector() const {
  Vector x;
  x << V, alpha, beta, p, q, r, phi, theta, psi, north, east, h;
  return x;
}

AircraftState AircraftState::from_vector(const Vector& x) {
  AircraftState s;
  s.V = x[0];
  s.alpha = x[1];
  s.beta = x[2];
  s.p = x[3];
  s.q = x[4];
  s.r = x[5];
  s.phi = x[6];
  s.theta = x[7];
  s.psi = x[8];
  s.north = x[9];
  s.east = x[10];
  s.h = x[11];
  return s;
}

bool AircraftState::finite() const { return to_vector().allFinite(); }

namespace {
double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}
}  // namespace

void wrap_attitude(AircraftState& s) {
  s.phi = wrap_pi(s.phi);
  s.psi = wrap_pi(s.psi);
}

void AirframeParameters::validate() const {
  if (!(mass > 0.0 && wing_area > 0.0 && span > 0.0 && chord > 0.0))
    throw ConfigError("airframe: mass, wing area, span and chord must be positive");
  if (!inertia.isApprox(inertia.transpose(), 1e-12))
    throw ConfigError("airframe: inertia tensor is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw ConfigError("airframe: inertia tensor is not positive definite");
  if (x_cg < 0.2 || x_cg > 0.45)
    throw ConfigError("airframe: x_cg outside supported range [0.2, 0.45]");
}

// ISA troposphere (lapse rate) and lower stratosphere (isothermal).
AtmosphereState atmosphere(double altitude_m) {
  if (!(altitude_m >= 0.0 && altitude_m <= kMaxAtmosphereAltitude))
    throw DomainError("atmosphere: altitude " + std::to_string(altitude_m) +
                      " m outside [0, 20000]");
  constexpr double T0 = 288.15, P0 = 101325.0, L = 0.0065, R = 287.05287;
  constexpr double kGamma = 1.4, kTropopause = 11000.0;
  constexpr double kExponent = kStandardGravity / (L * R);
  AtmosphereState a;
  if (altitude_m <= kTropopause) {
    a.temperature = T0 - L * altitude_m;
    a.pressure = P0 * std::pow(a.temperature / T0, kExponent);
  } else {
    const double T11 = T0 - L * kTropopause;
    const double P11 = P0 * std::pow(T11 / T0, kExponent);
    a.temperature = T11;
    a.pressure = P11 * std::exp(-kStandardGravity * (altitude_m - kTropopause) / (R * T11));
  }
  a.density = a.pressure / (R * a.temperature);
  a.speed_of_sound = std::sqrt(kGamma * R * a.temperature);
  return a;
}

AtmosphereState atmosphere_clamped(double altitude_m) {
  if (!std::isfinite(altitude_m)) altitude_m = 0.0;
  return atmosphere(std::clamp(altitude_m, 0.0, kMaxAtmosphereAltitude));
}

VecX EffectorSuite::lower_deg() const {
  VecX v(size());
  for (int i = 0; i < size(); ++i) v[i] = surfaces[i].min_deg;
  return v;
}

VecX EffectorSuite::upper_deg() const {
  VecX v(size());
  for (int i = 0; i < size(); ++i) v[i] = surfaces[i].max_deg;
  return v;
}

VecX EffectorSuite::rate_deg_s() const {
  VecX v(size());
  for (int i = 0; i < size(); ++i) v[i] = surfaces[i].rate_deg_s;
  return v;
}

void EffectorSuite::validate() const {
  if (surfaces.empty()) throw ConfigError("effectors: no surfaces declared");
  for (const auto& s : surfaces) {
    if (!(s.min_deg < s.max_deg))
      throw ConfigError("effectors: " + s.name + " has min >= max");
    if (!(s.rate_deg_s > 0.0)) throw ConfigError("effectors: " + s.name + " rate limit must be > 0");
    if (s.lag_s < 0.0) throw ConfigError("effectors: " + s.name + " lag must be >= 0");
  }
}

namespace {

struct ModelInputs {
  std::vector<double> vars;
  bool clamped = false;
};

ModelInputs model_inputs(const Aircraft& ac, const AircraftState& s, std::span<const double> u_deg) {
  const auto& model = ac.aero;
  const auto& geo = ac.airframe;
  const int m = model.num_surfaces();
  if (static_cast<int>(u_deg.size()) != m)
    throw ConfigError("aero: deflection vector has wrong length");

  ModelInputs in;
  in.vars.resize(model.num_variables());
  const double alpha = std::clamp(s.alpha, model.alpha_min(), model.alpha_max());
  const double beta = std::clamp(s.beta, model.beta_min(), model.beta_max());
  in.clamped = alpha != s.alpha || beta != s.beta;
  const double inv2V = 1.0 / (2.0 * s.V);
  in.vars[0] = alpha;
  in.vars[1] = beta;
  in.vars[2] = s.p * geo.span * inv2V;
  in.vars[3] = s.q * geo.chord * inv2V;
  in.vars[4] = s.r * geo.span * inv2V;
  for (int j = 0; j < m; ++j) {
    const auto& surf = ac.effectors.surfaces[j];
    const double u = std::clamp(u_deg[j], surf.min_deg, surf.max_deg);
    in.clamped = in.clamped || u != u_deg[j];
    in.vars[AeroModel::kNumStateVars + j] = u * kDegToRad;
  }
  return in;
}

}  // namespace

AeroCoefficients aero_coefficients(const Aircraft& ac, const AircraftState& state,
                                   std::span<const double> u_deg) {
  const auto in = model_inputs(ac, state, u_deg);
  const auto& model = ac.aero;
  AeroCoefficients c;
  c.CD = model.evaluate(AeroModel::kCD, in.vars);
  c.CY = model.evaluate(AeroModel::kCY, in.vars);
  c.CL = model.evaluate(AeroModel::kCL, in.vars);
  c.Cl = model.evaluate(AeroModel::kCl, in.vars);
  c.Cm = model.evaluate(AeroModel::kCm, in.vars);
  c.Cn = model.evaluate(AeroModel::kCn, in.vars);
  c.CLq = model.partial(AeroModel::kCL, in.vars, 3);
  c.CDq = model.partial(AeroModel::kCD, in.vars, 3);
  c.CYr = model.partial(AeroModel::kCY, in.vars, 4);
  c.extrapolated = in.clamped;

  // Moment transfer from the reference CG to the actual CG. The reference
  // point sits (x_cg - x_ref) * cbar ahead of the CG along body x.
  const double shift = ac.airframe.x_cg - model.reference_cg();
  if (shift != 0.0) {
    const double ca = std::cos(in.vars[0]), sa = std::sin(in.vars[0]);
    const double cb = std::cos(in.vars[1]), sb = std::sin(in.vars[1]);
    const double CYb = -c.CD * sb + c.CY * cb;
    const double CZ = -c.CD * sa * cb - c.CY * sa * sb - c.CL * ca;
    c.Cm += -shift * CZ;
    c.Cn += shift * (ac.airframe.chord / ac.airframe.span) * CYb;
  }
  return c;
}

Mat3X control_effectiveness(const Aircraft& ac, const AircraftState& state,
                            std::span<const double> u0_deg, double step_deg) {
  const int m = ac.num_surfaces();
  Mat3X phi(3, m);
  std::vector<double> u(u0_deg.begin(), u0_deg.end());
  const Vec3 c0 = aero_coefficients(ac, state, u).moments();

  for (int j = 0; j < m; ++j) {
    const auto& surf = ac.effectors.surfaces[j];
    const double uj = u0_deg[j];
    const bool room_up = uj + step_deg <= surf.max_deg;
    const bool room_down = uj - step_deg >= surf.min_deg;
    Vec3 hi = c0, lo = c0;
    double span_deg = 0.0;
    if (room_up) {
      u[j] = uj + step_deg;
      hi = aero_coefficients(ac, state, u).moments();
      span_deg += step_deg;
    }
    if (room_down) {
      u[j] = uj - step_deg;
      lo = aero_coefficients(ac, state, u).moments();
      span_deg += step_deg;
    }
    u[j] = uj;
    if (span_deg == 0.0)
      throw NumericError("control_effectiveness: surface range narrower than step", j);
    phi.col(j) = (hi - lo) / (span_deg * kDegToRad);
    if (!phi.col(j).allFinite())
      throw NumericError("control_effectiveness: non-finite column for surface " +
                             ac.effectors.surfaces[j].name, j);
  }
  return phi;
}

}  // namespace floc
