#pragma once

#include "floc/common.hpp"
#include "floc/state.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace floc {

struct AirframeParameters {
  double mass = 0.0;          // [kg]
  Mat3 inertia = Mat3::Zero();  // body-axis inertia tensor [kg m^2]
  double wing_area = 0.0;     // S [m^2]
  double span = 0.0;          // b [m]
  double chord = 0.0;         // mean aerodynamic chord [m]
  double x_cg = 0.0;          // CG location, fraction of chord

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
};

struct AtmosphereState {
  double density = 0.0;         // [kg/m^3]
  double speed_of_sound = 0.0;  // [m/s]
  double temperature = 0.0;     // [K]
  double pressure = 0.0;        // [Pa]
};

inline constexpr double kMaxAtmosphereAltitude = 20000.0;

/// International Standard Atmosphere, 0 to 20 km. Throws DomainError outside.
AtmosphereState atmosphere(double altitude_m);

/// Same as atmosphere() but with altitude clamped into the supported range.
/// The dynamics use this so that a departing trajectory stays evaluable.
AtmosphereState atmosphere_clamped(double altitude_m);

struct Surface {
  std::string name;
  double min_deg = 0.0;
  double max_deg = 0.0;
  double rate_deg_s = 0.0;
  double lag_s = 0.0;  // first-order lag time constant, 0 = none
};

/// Independent control surfaces with position and rate limits.
struct EffectorSuite {
  std::vector<Surface> surfaces;

  int size() const { return static_cast<int>(surfaces.size()); }
  VecX lower_deg() const;
  VecX upper_deg() const;
  VecX rate_deg_s() const;
  void validate() const;
};

struct AeroCoefficients {
  double CD = 0.0, CY = 0.0, CL = 0.0;  // wind-axis forces
  double Cl = 0.0, Cm = 0.0, Cn = 0.0;  // body-axis moments about the actual CG
  double CLq = 0.0, CDq = 0.0;          // per unit qhat = q cbar / 2V
  double CYr = 0.0;                     // per unit rhat = r b / 2V
  bool extrapolated = false;            // query clamped into the validity envelope

  Vec3 moments() const { return {Cl, Cm, Cn}; }
};

/// Polynomial aerodynamic model loaded from a data file.
///
/// Every coefficient is a sum of terms c * prod(x_k^e_k) over the variables
/// {alpha, beta, phat, qhat, rhat, u_1..u_m}. Angles are stored in radians
/// after load. Moments are referenced to `reference_cg` and transferred to the
/// airframe CG on evaluation.
class AeroModel {
 public:
  enum Coefficient : int { kCD = 0, kCY, kCL, kCl, kCm, kCn, kNumCoefficients };
  static constexpr int kNumStateVars = 5;  // alpha, beta, phat, qhat, rhat

  struct Term {
    double coef = 0.0;
    std::vector<std::uint8_t> powers;  // one per variable
  };

  AeroModel() = default;
  AeroModel(std::vector<std::string> surface_names, double reference_cg,
            double alpha_min, double alpha_max, double beta_min, double beta_max);

  void add_term(Coefficient c, Term term);

  int num_variables() const { return kNumStateVars + static_cast<int>(surfaces_.size()); }
  int num_surfaces() const { return static_cast<int>(surfaces_.size()); }
  const std::vector<std::string>& surface_names() const { return surfaces_; }
  int variable_index(const std::string& name) const;  // -1 if unknown
  double reference_cg() const { return reference_cg_; }
  double alpha_min() const { return alpha_min_; }
  double alpha_max() const { return alpha_max_; }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }
  const std::vector<Term>& terms(Coefficient c) const { return terms_[c]; }

  /// Raw polynomial value at a variable vector (radians / nondimensional).
  double evaluate(Coefficient c, std::span<const double> vars) const;
  /// Analytic partial derivative with respect to variable `var`.
  double partial(Coefficient c, std::span<const double> vars, int var) const;

 private:
  std::vector<std::string> surfaces_;
  double reference_cg_ = 0.25;
  double alpha_min_ = 0.0, alpha_max_ = 0.0, beta_min_ = 0.0, beta_max_ = 0.0;
  std::array<std::vector<Term>, kNumCoefficients> terms_;
};

/// Everything that describes one vehicle: constants, surfaces and aerodynamics.
struct Aircraft {
  std::string name;
  AirframeParameters airframe;
  EffectorSuite effectors;
  AeroModel aero;

  int num_surfaces() const { return effectors.size(); }
};

Aircraft load_aircraft(const std::filesystem::path& path);
Aircraft parse_aircraft(const std::string& json_text);

/// Aerodynamic coefficients at `state` with deflections `u_deg`.
AeroCoefficients aero_coefficients(const Aircraft& ac, const AircraftState& state,
                                   std::span<const double> u_deg);

inline constexpr double kEffectivenessStepDeg = 0.1;

/// Jacobian of (Cl, Cm, Cn) with respect to deflection, per radian, by
/// central differences (one-sided at an active position limit).
Mat3X control_effectiveness(const Aircraft& ac, const AircraftState& state,
                            std::span<const double> u0_deg,
                            double step_deg = kEffectivenessStepDeg);

}  // namespace floc
