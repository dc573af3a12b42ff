#include "floc/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace floc {

namespace {

std::vector<int> indices_where(const std::vector<int>& active, bool free) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(active.size()); ++i)
    if ((active[i] == 0) == free) out.push_back(i);
  return out;
}

std::vector<int> classify(const VecX& x, const VecX& lower, const VecX& upper) {
  std::vector<int> active(x.size(), 0);
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] <= lower[i]) active[i] = -1;
    else if (x[i] >= upper[i]) active[i] = 1;
  }
  return active;
}

// Moves x toward z over the free set, stopping at the first bound reached.
// Returns true when the full step was taken.
bool step_toward(VecX& x, const VecX& z, const std::vector<int>& free_set, const VecX& lower,
                 const VecX& upper, std::vector<int>& active) {
  double t = 1.0;
  for (std::size_t k = 0; k < free_set.size(); ++k) {
    const int i = free_set[k];
    const double d = z[k] - x[i];
    if (z[k] < lower[i] && d < 0.0) t = std::min(t, (lower[i] - x[i]) / d);
    if (z[k] > upper[i] && d > 0.0) t = std::min(t, (upper[i] - x[i]) / d);
  }
  t = std::max(t, 0.0);
  for (std::size_t k = 0; k < free_set.size(); ++k) {
    const int i = free_set[k];
    x[i] += t * (z[k] - x[i]);
  }
  if (t >= 1.0) {
    for (int i : free_set) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return true;
  }
  // Pin every variable that reached (or crossed through rounding) a bound.
  const double eps = 1e-14;
  for (int i : free_set) {
    if (x[i] <= lower[i] + eps * (1.0 + std::abs(lower[i]))) {
      x[i] = lower[i];
      active[i] = -1;
    } else if (x[i] >= upper[i] - eps * (1.0 + std::abs(upper[i]))) {
      x[i] = upper[i];
      active[i] = 1;
    }
  }
  return false;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& A, const std::vector<int>& idx) {
  Eigen::MatrixXd out(A.rows(), idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(k) = A.col(idx[k]);
  return out;
}

VecX min_norm_solve(const Eigen::MatrixXd& A, const VecX& b) {
  if (A.cols() == 0) return VecX(0);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  return cod.solve(b);
}

// Multipliers minimizing the bound-multiplier magnitude subject to exact
// stationarity on the free set.
Vec3 recover_lambda(const Mat3X& phi, const VecX& u, const std::vector<int>& active) {
  const auto F = indices_where(active, true);
  const auto W = indices_where(active, false);
  const Eigen::MatrixXd phiF = columns(phi, F);
  const Eigen::MatrixXd phiW = columns(phi, W);
  VecX uF(F.size()), uW(W.size());
  for (std::size_t k = 0; k < F.size(); ++k) uF[k] = u[F[k]];
  for (std::size_t k = 0; k < W.size(); ++k) uW[k] = u[W[k]];

  Vec3 lambda0 = Vec3::Zero();
  Eigen::MatrixXd null_basis = Eigen::MatrixXd::Identity(3, 3);
  if (!F.empty()) {
    const Eigen::MatrixXd AT = phiF.transpose();  // |F| x 3
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(AT, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    int rank = 0;
    for (int k = 0; k < svd.singularValues().size(); ++k)
      if (svd.singularValues()[k] > 1e-12 * std::max(1.0, smax)) ++rank;
    lambda0 = svd.solve(-uF);
    null_basis = svd.matrixV().rightCols(3 - rank);
  }
  if (W.empty() || null_basis.cols() == 0) return lambda0;
  // Choose the null-space component so bound gradients carry the right
  // sign: s_j (resid_j + M_j c) >= 0, with s = +1 at a lower bound and -1 at
  // an upper bound. Rows are few, so enumerate which ones are tight.
  const VecX resid = uW + phiW.transpose() * lambda0;
  const Eigen::MatrixXd M = phiW.transpose() * null_basis;
  const int nw = static_cast<int>(W.size());
  Eigen::MatrixXd S(nw, M.cols());
  VecX lo(nw);
  for (int j = 0; j < nw; ++j) {
    const double sgn = active[W[j]] < 0 ? 1.0 : -1.0;
    S.row(j) = sgn * M.row(j);
    lo[j] = -sgn * resid[j];
  }
  const double tol = 1e-12 * (1.0 + u.norm());
  std::optional<VecX> best;
  for (unsigned mask = 0; mask < (1u << nw); ++mask) {
    std::vector<int> rows;
    for (int j = 0; j < nw; ++j)
      if ((mask >> j) & 1u) rows.push_back(j);
    if (static_cast<int>(rows.size()) > M.cols()) continue;
    VecX c = VecX::Zero(M.cols());
    if (!rows.empty()) {
      Eigen::MatrixXd A(rows.size(), M.cols());
      VecX b(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        A.row(k) = S.row(rows[k]);
        b[k] = lo[rows[k]];
      }
      c = min_norm_solve(A, b);
    }
    if (((S * c - lo).array() < -tol).any()) continue;
    if (!best || c.squaredNorm() < best->squaredNorm()) best = c;
  }
  const VecX c = best ? *best : min_norm_solve(M, -resid);
  return lambda0 + null_basis * c;
}

std::vector<int> signature(const std::vector<int>& a) { return a; }

}  // namespace

void AllocationProblem::validate() const {
  const auto m = phi.cols();
  if (lower.size() != m || upper.size() != m) throw ConfigError("allocate: bound size mismatch");
  if (!phi.allFinite() || !tau.allFinite() || !lower.allFinite() || !upper.allFinite())
    throw NumericError("allocate: non-finite input");
  for (int i = 0; i < m; ++i)
    if (!(lower[i] < upper[i])) throw ConfigError("allocate: lower bound not below upper");
}

BoundedLeastSquares bounded_least_squares(const Eigen::MatrixXd& A, const VecX& b, const VecX& lower,
                                          const VecX& upper, const VecX& start, int max_iterations) {
  BoundedLeastSquares out;
  out.x = start.cwiseMax(lower).cwiseMin(upper);
  out.active = classify(out.x, lower, upper);
  const double scale = 1.0 + A.norm() * (b.norm() + A.norm() * (upper - lower).norm());
  const double tol = 1e-13 * scale;
  std::set<std::vector<int>> released_from;

  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    const auto F = indices_where(out.active, true);
    const auto W = indices_where(out.active, false);
    VecX rhs = b;
    for (int i : W) rhs -= A.col(i) * out.x[i];
    const VecX z = min_norm_solve(columns(A, F), rhs);
    if (!step_toward(out.x, z, F, lower, upper, out.active)) continue;

    const VecX g = A.transpose() * (A * out.x - b);
    int release = -1;
    double worst = tol;
    for (int i : W) {
      const double v = out.active[i] < 0 ? -g[i] : g[i];
      if (v > worst) {
        worst = v;
        release = i;
      }
    }
    if (release < 0 || !released_from.insert(signature(out.active)).second) {
      out.converged = true;
      return out;
    }
    out.active[release] = 0;
  }
  return out;
}

StationarityCheck stationarity(const Mat3X& phi, const VecX& u, const std::vector<int>& active) {
  StationarityCheck s;
  s.lambda = recover_lambda(phi, u, active);
  const VecX g = u + phi.transpose() * s.lambda;
  double free_sq = 0.0;
  s.sign_consistent = true;
  const double tol = 1e-9 * (1.0 + u.norm());
  for (int i = 0; i < u.size(); ++i) {
    if (active[i] == 0) free_sq += g[i] * g[i];
    // Upper-active needs g <= 0, lower-active needs g >= 0.
    if (active[i] > 0 && g[i] > tol) s.sign_consistent = false;
    if (active[i] < 0 && g[i] < -tol) s.sign_consistent = false;
  }
  s.free_residual = std::sqrt(free_sq);
  return s;
}

namespace {

// min 1/2 |u|^2  s.t. Phi u = y, l <= u <= h, from a feasible start.
int min_norm_equality(const Mat3X& phi, const Vec3& y, const VecX& lower, const VecX& upper,
                      VecX& x, std::vector<int>& active, int max_iterations, bool& converged) {
  const Eigen::MatrixXd A = phi;
  std::set<std::vector<int>> released_from;
  const double tol = 1e-12 * (1.0 + (upper - lower).norm());
  converged = false;
  int it = 0;
  for (; it < max_iterations; ++it) {
    const auto F = indices_where(active, true);
    const auto W = indices_where(active, false);
    Vec3 rhs = y;
    for (int i : W) rhs -= phi.col(i) * x[i];
    const VecX z = min_norm_solve(columns(A, F), rhs);
    if (!step_toward(x, z, F, lower, upper, active)) continue;

    const Vec3 lambda = recover_lambda(phi, x, active);
    const VecX g = x + phi.transpose() * lambda;
    int release = -1;
    double worst = tol;
    for (int i : W) {
      const double v = active[i] > 0 ? g[i] : -g[i];
      if (v > worst) {
        worst = v;
        release = i;
      }
    }
    if (release < 0 || !released_from.insert(signature(active)).second) {
      converged = true;
      return it + 1;
    }
    active[release] = 0;
  }
  return it;
}

}  // namespace

AllocationResult allocate(const AllocationProblem& problem, const AllocatorOptions& options) {
  problem.validate();
  const auto m = problem.phi.cols();
  AllocationResult res;
  const VecX start = problem.warm_start && problem.warm_start->size() == m
                         ? *problem.warm_start
                         : VecX::Zero(m);

  auto fit = bounded_least_squares(problem.phi, problem.tau, problem.lower, problem.upper, start,
                                   options.max_iterations);
  res.iterations = fit.iterations;
  const double fit_residual = (problem.phi * fit.x - problem.tau).norm();
  const bool attainable = fit_residual <= options.exact_tolerance;
  const Vec3 target = attainable ? problem.tau : Vec3(problem.phi * fit.x);

  VecX x = fit.x;
  std::vector<int> active = fit.active;
  bool converged = false;
  res.iterations += min_norm_equality(problem.phi, target, problem.lower, problem.upper, x, active,
                                      options.max_iterations, converged);
  res.u = x;
  res.active = classify(x, problem.lower, problem.upper);
  res.residual = (problem.phi * x - problem.tau).norm();

  if (!fit.converged || !converged) {
    res.status = AllocationStatus::kError;
    res.message = "iteration budget exhausted";
  } else if (attainable && res.residual <= 10.0 * options.exact_tolerance) {
    res.status = AllocationStatus::kExact;
  } else {
    res.status = AllocationStatus::kRelaxed;
  }
  return res;
}

AllocationResult Allocator::solve(AllocationProblem problem) {
  if (!problem.warm_start && previous_) problem.warm_start = previous_;
  AllocationResult r = allocate(problem, options_);
  previous_ = r.u;
  return r;
}

}  // namespace floc
