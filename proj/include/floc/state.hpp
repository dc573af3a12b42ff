#pragma once

#include "floc/common.hpp"

#include <Eigen/Dense>

namespace floc {

/// Rigid-body flight state in wind-axis form.
///
/// Angles and rates are in radians; position is north/east/altitude in metres.
struct AircraftState {
  double V = 0.0;      // airspeed [m/s]
  double alpha = 0.0;  // angle of attack [rad]
  double beta = 0.0;   // sideslip [rad]
  double p = 0.0;      // body roll rate [rad/s]
  double q = 0.0;      // body pitch rate [rad/s]
  double r = 0.0;      // body yaw rate [rad/s]
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;
  double north = 0.0;
  double east = 0.0;
  double h = 0.0;  // altitude [m], positive up

  static constexpr int kSize = 12;
  using Vector = Eigen::Matrix<double, kSize, 1>;

  Vector to_vector() const;
  static AircraftState from_vector(const Vector& x);

  Vec3 rates() const { return {p, q, r}; }
  bool finite() const;
};

/// Time derivative of AircraftState; same layout.
using StateRate = AircraftState;

/// Wraps attitude angles to principal ranges (phi, psi in (-pi, pi]).
void wrap_attitude(AircraftState& s);

}  // namespace floc
