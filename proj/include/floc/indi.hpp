#pragma once

#include "floc/airframe.hpp"
#include "floc/state.hpp"

namespace floc {

/// Proportional gains of the two control loops [1/s]. Defaults follow the
/// reference design: alpha 2.5, beta 1, p 10, q 10, r 5.
struct ControllerGains {
  double alpha = 2.5;
  double beta = 1.0;
  double p = 10.0;
  double q = 10.0;
  double r = 5.0;

  Vec3 rates() const { return {p, q, r}; }
  Vec2 angles() const { return {alpha, beta}; }
  void validate() const;
};

struct PilotCommand {
  double alpha = 0.0;  // [rad]
  double beta = 0.0;   // [rad]
  double p = 0.0;      // [rad/s]
};

struct RateCommand {
  double p = 0.0, q = 0.0, r = 0.0;
  Vec3 vec() const { return {p, q, r}; }
};

/// Demanded moment coefficients: the full inversion and the share left for
/// the control surfaces once the airframe baseline is removed.
struct MomentDemand {
  Vec3 total = Vec3::Zero();
  Vec3 control = Vec3::Zero();  // tau_c
};

struct GMatrix {
  Mat2 G = Mat2::Identity();
  double condition = 1.0;
};

struct SingularGError : NumericError {
  using NumericError::NumericError;
};

inline constexpr double kSingularDeterminant = 1e-10;

/// Sensitivity of (alpha', beta') to (q, r) at the current point.
GMatrix g_matrix(const AircraftState& s, const AirframeParameters& af, const AtmosphereState& atm,
                 const AeroCoefficients& aero);

/// Outer loop: (alpha, beta) tracking through inversion of the (q, r) map.
/// `angle_rates0` holds the measured (alpha', beta').
Vec2 outer_loop(const PilotCommand& cmd, const AircraftState& s, const Vec2& angle_rates0,
                const Vec2& qr0, const Mat2& G, const ControllerGains& gains);

/// The forward map inverted by the outer loop: (alpha', beta') produced by (q, r).
Vec2 angle_rate_response(const Vec2& qr, const Vec2& angle_rates0, const Vec2& qr0, const Mat2& G);

/// Inner loop: body-rate tracking via Euler's equations, returning total
/// moment coefficients and the control share (total minus `baseline`).
MomentDemand inner_loop(const RateCommand& cmd, const AircraftState& s, const AirframeParameters& af,
                        double dynamic_pressure, const ControllerGains& gains,
                        const Vec3& baseline = Vec3::Zero());

/// Moment coefficients that realise body angular acceleration `omega_dot`
/// at rate `omega`: diag(b, cbar, b)^-1 (J omega_dot + omega x J omega) / (qbar S).
Vec3 required_moment_coefficients(const Vec3& omega, const Vec3& omega_dot,
                                  const AirframeParameters& af, double dynamic_pressure);

/// Inverse of the inner loop: the rate command whose demand equals the total
/// moment coefficients `total`.
RateCommand rates_for_moment_coefficients(const Vec3& total, const AircraftState& s,
                                          const AirframeParameters& af, double dynamic_pressure,
                                          const ControllerGains& gains);

/// Second-order low-pass differentiator for (alpha, beta). Optional; the
/// default pipeline reads angle rates from the true state derivative.
class AngleRateFilter {
 public:
  AngleRateFilter(double natural_freq = 40.0, double damping = 0.7)
      : wn_(natural_freq), zeta_(damping) {}
  Vec2 update(const Vec2& angles, double dt);
  void reset(const Vec2& angles);

 private:
  double wn_, zeta_;
  bool primed_ = false;
  Vec2 pos_ = Vec2::Zero();
  Vec2 vel_ = Vec2::Zero();
};

}  // namespace floc
