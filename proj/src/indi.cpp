#include "floc/indi.hpp"

#include <cmath>

namespace floc {

void ControllerGains::validate() const {
  if (!(alpha > 0 && beta > 0 && p > 0 && q > 0 && r > 0))
    throw ConfigError("gains: all controller gains must be > 0");
}

GMatrix g_matrix(const AircraftState& s, const AirframeParameters& af, const AtmosphereState& atm,
                 const AeroCoefficients& aero) {
  const double cb = std::cos(s.beta), sb = std::sin(s.beta);
  const double ca = std::cos(s.alpha), sa = std::sin(s.alpha);
  const double rhoS = atm.density * af.wing_area;
  const double m = af.mass;

  GMatrix g;
  g.G(0, 0) = 1.0 - rhoS * af.chord * aero.CLq / (4.0 * m * cb);
  g.G(0, 1) = -std::tan(s.beta) * sa;
  g.G(1, 0) = rhoS * af.chord * aero.CDq / (4.0 * m) * sb * (1.0 - cb);
  g.G(1, 1) = rhoS * af.span * aero.CYr / (4.0 * m) * cb * cb - ca;

  const double det = g.G.determinant();
  if (!(std::abs(det) >= kSingularDeterminant))
    throw SingularGError("g_matrix: |det G| below threshold");
  const Eigen::JacobiSVD<Mat2> svd(g.G);
  g.condition = svd.singularValues()[0] / svd.singularValues()[1];
  return g;
}

Vec2 outer_loop(const PilotCommand& cmd, const AircraftState& s, const Vec2& angle_rates0,
                const Vec2& qr0, const Mat2& G, const ControllerGains& gains) {
  const Vec2 virtual_input(gains.alpha * (cmd.alpha - s.alpha), gains.beta * (cmd.beta - s.beta));
  if (!(std::abs(G.determinant()) >= kSingularDeterminant))
    throw SingularGError("outer_loop: singular G");
  return G.partialPivLu().solve(virtual_input - angle_rates0) + qr0;
}

Vec2 angle_rate_response(const Vec2& qr, const Vec2& angle_rates0, const Vec2& qr0, const Mat2& G) {
  return angle_rates0 + G * (qr - qr0);
}

Vec3 required_moment_coefficients(const Vec3& omega, const Vec3& omega_dot,
                                  const AirframeParameters& af, double dynamic_pressure) {
  const Mat3& J = af.inertia;
  const Vec3 moment = J * omega_dot + omega.cross(J * omega);
  const double qS = dynamic_pressure * af.wing_area;
  return {moment[0] / (qS * af.span), moment[1] / (qS * af.chord), moment[2] / (qS * af.span)};
}

MomentDemand inner_loop(const RateCommand& cmd, const AircraftState& s, const AirframeParameters& af,
                        double dynamic_pressure, const ControllerGains& gains, const Vec3& baseline) {
  if (!(dynamic_pressure > 0.0)) throw DomainError("inner_loop: dynamic pressure must be > 0");
  const Vec3 omega = s.rates();
  const Vec3 omega_dot = gains.rates().cwiseProduct(cmd.vec() - omega);
  MomentDemand d;
  d.total = required_moment_coefficients(omega, omega_dot, af, dynamic_pressure);
  d.control = d.total - baseline;
  if (!d.total.allFinite()) throw NumericError("inner_loop: non-finite demand");
  return d;
}

RateCommand rates_for_moment_coefficients(const Vec3& total, const AircraftState& s,
                                          const AirframeParameters& af, double dynamic_pressure,
                                          const ControllerGains& gains) {
  if (!(dynamic_pressure > 0.0)) throw DomainError("rates_for_moment_coefficients: dynamic pressure must be > 0");
  const Vec3 omega = s.rates();
  const double qS = dynamic_pressure * af.wing_area;
  const Vec3 moment(total[0] * qS * af.span, total[1] * qS * af.chord, total[2] * qS * af.span);
  const Vec3 omega_dot = af.inertia.ldlt().solve(moment - omega.cross(af.inertia * omega));
  const Vec3 cmd = omega_dot.cwiseQuotient(gains.rates()) + omega;
  return {cmd[0], cmd[1], cmd[2]};
}

void AngleRateFilter::reset(const Vec2& angles) {
  pos_ = angles;
  vel_.setZero();
  primed_ = true;
}

Vec2 AngleRateFilter::update(const Vec2& angles, double dt) {
  if (!primed_) reset(angles);
  // Semi-implicit Euler on x'' = wn^2 (u - x) - 2 zeta wn x'.
  const Vec2 acc = wn_ * wn_ * (angles - pos_) - 2.0 * zeta_ * wn_ * vel_;
  vel_ += dt * acc;
  pos_ += dt * vel_;
  return vel_;
}

}  // namespace floc
