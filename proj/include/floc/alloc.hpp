#pragma once

#include "floc/common.hpp"

#include <optional>
#include <vector>

namespace floc {

/// min 1/2 u'u  s.t.  Phi u = tau_c,  lower <= u <= upper   (radians)
struct AllocationProblem {
  Mat3X phi;
  Vec3 tau = Vec3::Zero();
  VecX lower;
  VecX upper;
  std::optional<VecX> warm_start;

  void validate() const;
};

enum class AllocationStatus { kExact, kRelaxed, kError };

struct AllocationResult {
  VecX u;
  double residual = 0.0;  // ||Phi u - tau||
  AllocationStatus status = AllocationStatus::kError;
  int iterations = 0;
  std::vector<int> active;  // -1 at lower bound, +1 at upper, 0 free
  std::string message;
};

struct AllocatorOptions {
  double exact_tolerance = 1e-9;
  int max_iterations = 200;
};

/// Two-stage allocation: first the box-constrained least-squares fit of
/// tau, then the minimum-norm deflection reproducing the best attainable
/// moment. When tau is attainable the two stages reduce to Phi u = tau.
AllocationResult allocate(const AllocationProblem& problem, const AllocatorOptions& options = {});

/// Allocation with warm start carried between calls.
class Allocator {
 public:
  explicit Allocator(AllocatorOptions options = {}) : options_(options) {}
  AllocationResult solve(AllocationProblem problem);
  void reset() { previous_.reset(); }

 private:
  AllocatorOptions options_;
  std::optional<VecX> previous_;
};

/// Box-constrained linear least squares, min ||A x - b|| for l <= x <= h,
/// returning the minimum-norm member of each free subproblem.
struct BoundedLeastSquares {
  VecX x;
  std::vector<int> active;
  int iterations = 0;
  bool converged = false;
};
BoundedLeastSquares bounded_least_squares(const Eigen::MatrixXd& A, const VecX& b, const VecX& lower,
                                          const VecX& upper, const VecX& start, int max_iterations);

/// Lagrange multiplier estimate for the equality constraint and the
/// resulting stationarity residual of u + Phi' lambda restricted to free
/// variables. Used by KKT checks.
struct StationarityCheck {
  Vec3 lambda = Vec3::Zero();
  double free_residual = 0.0;    // ||(u + Phi' lambda)_F||
  bool sign_consistent = false;  // bound multipliers have the right sign
};
StationarityCheck stationarity(const Mat3X& phi, const VecX& u, const std::vector<int>& active);

}  // namespace floc
