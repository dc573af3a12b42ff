#pragma once

// Reference computations used by the unit and acceptance tests. None of
// these call into the library's geometry or solvers.

#include "floc/common.hpp"

#include <optional>
#include <random>
#include <vector>

namespace oracle {

using floc::Mat3;
using floc::Mat3X;
using floc::Vec3;
using floc::VecX;

struct LpSolution {
  enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };
  Status status = Status::kInfeasible;
  VecX x;
  double objective = 0.0;
};

/// Two-phase dense simplex with Bland's rule: min c'x s.t. A x = b, x >= 0.
LpSolution solve_lp(const Eigen::MatrixXd& A, const VecX& b, const VecX& c);

/// Smallest t with x - center = G lambda, |lambda_i| <= t (infinity when
/// x - center is outside the range of G). x is in the zonotope iff t <= 1.
double zonotope_gauge(const Vec3& center, const Mat3X& G, const Vec3& x);

/// Whether x is a convex combination of `points`, to `tolerance` in the
/// phase-one objective.
bool in_convex_hull(const std::vector<Vec3>& points, const Vec3& x, double tolerance = 1e-10);

/// Extreme points of a finite point set, found one at a time by asking
/// whether each point is a convex combination of the others.
std::vector<Vec3> extreme_points(const std::vector<Vec3>& points);

/// All 2^m images c + G s for sign vectors s.
std::vector<Vec3> box_vertex_images(const Vec3& center, const Mat3X& G);

/// Euclidean distance from x to a full-rank zonotope, by direct
/// minimization over each parallelogram 2-face (zero when inside).
double zonotope_distance(const Vec3& center, const Mat3X& G, const Vec3& x);

/// Minimum-norm u with Phi u = tau inside the box, found by enumerating
/// all 3^m lower/free/upper assignments. nullopt when tau is unattainable.
std::optional<VecX> enumerate_allocation(const Mat3X& phi, const Vec3& tau, const VecX& lower,
                                         const VecX& upper, double tolerance = 1e-10);

/// 1976 standard atmosphere troposphere, evaluated from its closed form.
struct IsaPoint {
  double temperature;
  double pressure;
  double density;
  double speed_of_sound;
};
IsaPoint isa_troposphere(double altitude_m);

/// exp(A t) x0 through Eigen's matrix-function module.
VecX linear_flow(const Eigen::MatrixXd& A, const VecX& x0, double t);

/// Monte-Carlo estimate of the convex-hull volume of `points`, sampling
/// uniformly in their bounding box.
double hull_volume_sampled(const std::vector<Vec3>& points, int samples, std::mt19937& rng);

Mat3X random_matrix(int cols, std::mt19937& rng, double scale = 1.0);

struct KktCheck {
  double free_residual = 0.0;  // max |u_k + phi_k' lambda| over free components
  bool signs_ok = false;       // some multiplier has the right sign on every bound
};

/// First-order conditions of min |u|^2 s.t. Phi u = tau, lower <= u <= upper:
/// u + Phi' lambda = nu_lower - nu_upper with nu >= 0. The free components fix
/// lambda by least squares; an LP then searches for multipliers with the
/// right signs on the bound-active components.
KktCheck allocation_kkt(const Mat3X& phi, const VecX& u, const VecX& lower, const VecX& upper,
                        double active_tolerance = 1e-12);

}  // namespace oracle
