#include "oracles.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {

constexpr double kPivotEps = 1e-11;

void pivot(Eigen::MatrixXd& T, int row, int col) {
  T.row(row) /= T(row, col);
  for (int i = 0; i < T.rows(); ++i)
    if (i != row && T(i, col) != 0.0) T.row(i) -= T(i, col) * T.row(row);
}

// Runs the simplex on tableau T whose last row holds reduced costs and whose
// last column holds the right-hand side. Only the first `ncols` columns may
// enter the basis.
LpSolution::Status iterate(Eigen::MatrixXd& T, std::vector<int>& basis, int ncols) {
  const int rows = static_cast<int>(T.rows()) - 1;
  const int rhs = static_cast<int>(T.cols()) - 1;
  for (int iter = 0; iter < 5000; ++iter) {
    int enter = -1;
    for (int j = 0; j < ncols; ++j)
      if (T(rows, j) < -kPivotEps) {
        enter = j;
        break;
      }
    if (enter < 0) return LpSolution::Status::kOptimal;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows; ++i) {
      if (T(i, enter) <= kPivotEps) continue;
      const double ratio = T(i, rhs) / T(i, enter);
      if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return LpSolution::Status::kUnbounded;
    pivot(T, leave, enter);
    basis[leave] = enter;
  }
  return LpSolution::Status::kIterationLimit;
}

}  // namespace

LpSolution solve_lp(const Eigen::MatrixXd& A_in, const VecX& b_in, const VecX& c) {
  const int m = static_cast<int>(A_in.rows());
  const int n = static_cast<int>(A_in.cols());
  Eigen::MatrixXd A = A_in;
  VecX b = b_in;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0.0) {
      A.row(i) *= -1.0;
      b[i] = -b[i];
    }

  // Phase one: artificial variables n .. n+m-1.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.topRightCorner(m, 1) = b;
  for (int i = 0; i < m; ++i) T.row(m) -= T.row(i);
  for (int i = 0; i < m; ++i) T(m, n + i) = 0.0;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  LpSolution out;
  auto status = iterate(T, basis, n + m);
  if (status != LpSolution::Status::kOptimal) {
    out.status = status;
    return out;
  }
  const double scale = 1.0 + b.lpNorm<Eigen::Infinity>();
  if (-T(m, n + m) > 1e-9 * scale) {
    out.status = LpSolution::Status::kInfeasible;
    return out;
  }

  // Drive remaining artificials out of the basis; drop redundant rows.
  std::vector<int> keep;
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) {
      keep.push_back(i);
      continue;
    }
    int col = -1;
    for (int j = 0; j < n; ++j)
      if (std::abs(T(i, j)) > 1e-9) {
        col = j;
        break;
      }
    if (col >= 0) {
      pivot(T, i, col);
      basis[i] = col;
      keep.push_back(i);
    }
  }

  const int r = static_cast<int>(keep.size());
  Eigen::MatrixXd T2 = Eigen::MatrixXd::Zero(r + 1, n + 1);
  std::vector<int> basis2(r);
  for (int k = 0; k < r; ++k) {
    T2.row(k).head(n) = T.row(keep[k]).head(n);
    T2(k, n) = T(keep[k], n + m);
    basis2[k] = basis[keep[k]];
  }
  T2.row(r).head(n) = c.transpose();
  for (int k = 0; k < r; ++k) T2.row(r) -= c[basis2[k]] * T2.row(k);

  status = iterate(T2, basis2, n);
  out.status = status;
  if (status != LpSolution::Status::kOptimal) return out;
  out.x = VecX::Zero(n);
  for (int k = 0; k < r; ++k) out.x[basis2[k]] = T2(k, n);
  out.objective = c.dot(out.x);
  return out;
}

double zonotope_gauge(const Vec3& center, const Mat3X& G, const Vec3& x) {
  const int m = static_cast<int>(G.cols());
  // Variables: lambda+ (m), lambda- (m), slack (m), t.
  const int n = 3 * m + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 + m, n);
  VecX b = VecX::Zero(3 + m);
  A.block(0, 0, 3, m) = G;
  A.block(0, m, 3, m) = -G;
  b.head(3) = x - center;
  for (int i = 0; i < m; ++i) {
    A(3 + i, i) = 1.0;
    A(3 + i, m + i) = 1.0;
    A(3 + i, 2 * m + i) = 1.0;
    A(3 + i, 3 * m) = -1.0;
  }
  VecX c = VecX::Zero(n);
  c[3 * m] = 1.0;
  const LpSolution s = solve_lp(A, b, c);
  if (s.status != LpSolution::Status::kOptimal) return std::numeric_limits<double>::infinity();
  return s.objective;
}

bool in_convex_hull(const std::vector<Vec3>& points, const Vec3& x, double tolerance) {
  const int k = static_cast<int>(points.size());
  if (k == 0) return false;
  Eigen::MatrixXd A(4, k);
  for (int j = 0; j < k; ++j) {
    A.block<3, 1>(0, j) = points[j];
    A(3, j) = 1.0;
  }
  VecX b(4);
  b << x, 1.0;
  const int m = 4;
  // Phase one only: minimize the artificial total directly.
  Eigen::MatrixXd Ae(m, k + 2 * m);
  Ae << A, Eigen::MatrixXd::Identity(m, m), -Eigen::MatrixXd::Identity(m, m);
  VecX c = VecX::Zero(k + 2 * m);
  c.tail(2 * m).setOnes();
  const LpSolution s = solve_lp(Ae, b, c);
  double scale = 1.0;
  for (const Vec3& p : points) scale = std::max(scale, p.lpNorm<Eigen::Infinity>());
  return s.status == LpSolution::Status::kOptimal && s.objective <= tolerance * scale;
}

std::vector<Vec3> extreme_points(const std::vector<Vec3>& points) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<Vec3> others;
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i && (points[j] - points[i]).norm() > 1e-12) others.push_back(points[j]);
    if (in_convex_hull(others, points[i])) continue;
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const Vec3& v) { return (v - points[i]).norm() <= 1e-12; });
    if (!dup) out.push_back(points[i]);
  }
  return out;
}

std::vector<Vec3> box_vertex_images(const Vec3& center, const Mat3X& G) {
  const int m = static_cast<int>(G.cols());
  std::vector<Vec3> out;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    Vec3 p = center;
    for (int k = 0; k < m; ++k) p += ((mask >> k) & 1u ? 1.0 : -1.0) * G.col(k);
    out.push_back(p);
  }
  return out;
}

namespace {

double segment_distance(const Vec3& a, const Vec3& b, const Vec3& x) {
  const Vec3 d = b - a;
  const double len2 = d.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (a + s * d - x).norm();
}

// Distance from x to {p0 + s a + t b : s, t in [-1, 1]}.
double parallelogram_distance(const Vec3& p0, const Vec3& a, const Vec3& b, const Vec3& x) {
  Eigen::Matrix2d N;
  N << a.dot(a), a.dot(b), a.dot(b), b.dot(b);
  const Eigen::Vector2d rhs(a.dot(x - p0), b.dot(x - p0));
  const Eigen::Vector2d st = N.ldlt().solve(rhs);
  if (std::abs(st[0]) <= 1.0 && std::abs(st[1]) <= 1.0) return (p0 + st[0] * a + st[1] * b - x).norm();
  const Vec3 c00 = p0 - a - b, c10 = p0 + a - b, c11 = p0 + a + b, c01 = p0 - a + b;
  return std::min({segment_distance(c00, c10, x), segment_distance(c10, c11, x),
                   segment_distance(c11, c01, x), segment_distance(c01, c00, x)});
}

}  // namespace

double zonotope_distance(const Vec3& center, const Mat3X& G, const Vec3& x) {
  if (zonotope_gauge(center, G, x) <= 1.0) return 0.0;
  const int m = static_cast<int>(G.cols());
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const Vec3 n = Vec3(G.col(i)).cross(Vec3(G.col(j)));
      if (n.norm() <= 1e-14) continue;
      for (double side : {1.0, -1.0}) {
        Vec3 p0 = center;
        for (int k = 0; k < m; ++k) {
          if (k == i || k == j) continue;
          const double proj = n.dot(G.col(k));
          p0 += side * (proj >= 0.0 ? 1.0 : -1.0) * G.col(k);
        }
        best = std::min(best, parallelogram_distance(p0, G.col(i), G.col(j), x));
      }
    }
  return best;
}

std::optional<VecX> enumerate_allocation(const Mat3X& phi, const Vec3& tau, const VecX& lower,
                                         const VecX& upper, double tolerance) {
  const int m = static_cast<int>(phi.cols());
  int combos = 1;
  for (int k = 0; k < m; ++k) combos *= 3;
  std::optional<VecX> best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int code = 0; code < combos; ++code) {
    VecX u = VecX::Zero(m);
    std::vector<int> free;
    int c = code;
    for (int k = 0; k < m; ++k, c /= 3) {
      const int digit = c % 3;
      if (digit == 0) u[k] = lower[k];
      else if (digit == 2) u[k] = upper[k];
      else free.push_back(k);
    }
    Vec3 rhs = tau - phi * u;
    if (!free.empty()) {
      Eigen::MatrixXd sub(3, free.size());
      for (std::size_t f = 0; f < free.size(); ++f) sub.col(f) = phi.col(free[f]);
      const VecX uf = sub.completeOrthogonalDecomposition().solve(rhs);
      for (std::size_t f = 0; f < free.size(); ++f) u[free[f]] = uf[f];
      rhs = tau - phi * u;
    }
    if (rhs.norm() > tolerance * (1.0 + tau.norm())) continue;
    if (((u - lower).array() < -1e-12).any() || ((upper - u).array() < -1e-12).any()) continue;
    if (u.squaredNorm() < best_norm) {
      best_norm = u.squaredNorm();
      best = u;
    }
  }
  return best;
}

IsaPoint isa_troposphere(double h) {
  constexpr double T0 = 288.15, p0 = 101325.0, L = 0.0065, R = 287.05287, g0 = 9.80665;
  IsaPoint out;
  out.temperature = T0 - L * h;
  out.pressure = p0 * std::pow(out.temperature / T0, g0 / (R * L));
  out.density = out.pressure / (R * out.temperature);
  out.speed_of_sound = std::sqrt(1.4 * R * out.temperature);
  return out;
}

VecX linear_flow(const Eigen::MatrixXd& A, const VecX& x0, double t) {
  const Eigen::MatrixXd At = A * t;
  return At.exp() * x0;
}

double hull_volume_sampled(const std::vector<Vec3>& points, int samples, std::mt19937& rng) {
  Vec3 lo = points.front(), hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int inside = 0;
  for (int s = 0; s < samples; ++s) {
    const Vec3 x(lo[0] + unit(rng) * (hi[0] - lo[0]), lo[1] + unit(rng) * (hi[1] - lo[1]),
                 lo[2] + unit(rng) * (hi[2] - lo[2]));
    if (in_convex_hull(points, x)) ++inside;
  }
  return (hi - lo).prod() * inside / samples;
}

Mat3X random_matrix(int cols, std::mt19937& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Mat3X out(3, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < 3; ++i) out(i, j) = g(rng);
  return out;
}

KktCheck allocation_kkt(const Mat3X& phi, const VecX& u, const VecX& lower, const VecX& upper,
                        double active_tolerance) {
  const int m = static_cast<int>(u.size());
  std::vector<int> free, low, up;
  for (int k = 0; k < m; ++k) {
    if (u[k] <= lower[k] + active_tolerance) low.push_back(k);
    else if (u[k] >= upper[k] - active_tolerance) up.push_back(k);
    else free.push_back(k);
  }
  KktCheck out;
  Vec3 lambda = Vec3::Zero();
  if (!free.empty()) {
    Eigen::MatrixXd A(free.size(), 3);
    VecX rhs(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) {
      A.row(i) = phi.col(free[i]).transpose();
      rhs[i] = -u[free[i]];
    }
    lambda = A.completeOrthogonalDecomposition().solve(rhs);
  }
  for (int k : free) out.free_residual = std::max(out.free_residual, std::abs(u[k] + phi.col(k).dot(lambda)));

  // Variables lambda+ (3), lambda- (3), one slack per bound-active row.
  const int nb = static_cast<int>(low.size() + up.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, 6 + nb);
  VecX b(m);
  int slack = 6, r = 0;
  auto add_row = [&](int k, double slack_sign) {
    A.block<1, 3>(r, 0) = phi.col(k).transpose();
    A.block<1, 3>(r, 3) = -phi.col(k).transpose();
    if (slack_sign != 0.0) A(r, slack++) = slack_sign;
    b[r++] = -u[k];
  };
  for (int k : free) add_row(k, 0.0);
  for (int k : low) add_row(k, -1.0);  // u + Phi' lambda >= 0
  for (int k : up) add_row(k, 1.0);    // u + Phi' lambda <= 0
  out.signs_ok = solve_lp(A, b, VecX::Zero(6 + nb)).status == LpSolution::Status::kOptimal;
  return out;
}

}  // namespace oracle
