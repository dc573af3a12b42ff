#include "floc/moment_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace floc {

IncrementBounds incremental_bounds(const VecX& u0_rad, const EffectorSuite& suite, double dt) {
  const int m = suite.size();
  if (u0_rad.size() != m) throw ConfigError("incremental_bounds: size mismatch");
  IncrementBounds b{VecX(m), VecX(m)};
  for (int j = 0; j < m; ++j) {
    const auto& s = suite.surfaces[j];
    const double step = s.rate_deg_s * kDegToRad * dt;
    b.upper[j] = std::min(step, s.max_deg * kDegToRad - u0_rad[j]);
    b.lower[j] = std::max(-step, s.min_deg * kDegToRad - u0_rad[j]);
  }
  return b;
}

MomentSetPolytope::MomentSetPolytope(const Vec3& center, Mat3X generators)
    : center_(center), generators_(std::move(generators)) {
  build_facets();
}

double MomentSetPolytope::scale() const {
  double s = center_.cwiseAbs().maxCoeff();
  for (int k = 0; k < generators_.cols(); ++k) s += generators_.col(k).norm();
  return s > 0.0 ? s : 1.0;
}

void MomentSetPolytope::build_facets() {
  facets_.clear();
  const int m = static_cast<int>(generators_.cols());
  double max_norm = 0.0;
  for (int k = 0; k < m; ++k) max_norm = std::max(max_norm, generators_.col(k).norm());

  Mat3 basis = Mat3::Identity();
  rank_ = 0;
  if (max_norm > 0.0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(generators_), Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    for (int k = 0; k < sv.size(); ++k)
      if (sv[k] > 1e-10 * sv[0]) ++rank_;
    basis = svd.matrixU();
  }

  std::vector<Vec3> normals;
  auto add = [&](Vec3 n) {
    n.normalize();
    for (const Vec3& e : normals)
      if (e.dot(n) > 1.0 - 1e-12) return;
    normals.push_back(n);
    normals.push_back(-n);
  };
  auto significant = [&](int k) { return generators_.col(k).norm() > 1e-12 * max_norm; };

  if (rank_ == 3) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        if (!significant(i) || !significant(j)) continue;
        const Vec3 gi = generators_.col(i), gj = generators_.col(j);
        const Vec3 n = gi.cross(gj);
        if (n.norm() > 1e-9 * gi.norm() * gj.norm()) add(n);
      }
  } else if (rank_ == 2) {
    const Vec3 plane = basis.col(2);
    for (int i = 0; i < m; ++i)
      if (significant(i)) add(plane.cross(Vec3(generators_.col(i))));
  } else if (rank_ == 1) {
    add(basis.col(0));
  }
  // Flat directions carry zero width.
  for (int k = rank_; k < 3; ++k) add(basis.col(k));

  for (const Vec3& n : normals) {
    double width = 0.0;
    for (int k = 0; k < m; ++k) width += std::abs(n.dot(generators_.col(k)));
    if (width < 1e-14 * max_norm) width = 0.0;
    facets_.push_back({n, n.dot(center_) + width, width});
  }
}

Containment MomentSetPolytope::contains(const Vec3& point, double tolerance) const {
  const double tol = tolerance * scale();
  Containment out;
  out.inside = true;
  double margin = std::numeric_limits<double>::infinity();
  double max_width = 0.0;
  for (const Facet& f : facets_) max_width = std::max(max_width, f.width);
  for (const Facet& f : facets_) {
    const double slack = f.offset - f.normal.dot(point);
    if (slack < -tol) out.inside = false;
    if (f.width > 0.0) {
      margin = std::min(margin, slack / f.width);
    } else if (slack < -tol) {
      margin = std::min(margin, slack / (max_width > 0.0 ? max_width : 1.0));
    }
  }
  out.margin = std::isfinite(margin) ? margin : 0.0;
  return out;
}

std::vector<Vec3> MomentSetPolytope::vertices() const {
  const int m = static_cast<int>(generators_.cols());
  if (rank_ == 0) return {center_};
  if (m > 20) throw DomainError("vertices: too many generators for enumeration");
  const double tol = 1e-10 * scale();
  std::vector<Vec3> out;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    Vec3 p = center_;
    for (int k = 0; k < m; ++k) p += ((mask >> k) & 1u ? 1.0 : -1.0) * generators_.col(k);
    Eigen::Matrix<double, 3, Eigen::Dynamic> tight(3, 0);
    for (const Facet& f : facets_) {
      if (f.width > 0.0 && std::abs(f.offset - f.normal.dot(p)) <= tol) {
        tight.conservativeResize(3, tight.cols() + 1);
        tight.col(tight.cols() - 1) = f.normal;
      }
    }
    if (tight.cols() < rank_) continue;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(tight);
    lu.setThreshold(1e-9);
    if (lu.rank() < rank_) continue;
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const Vec3& v) { return (v - p).norm() <= tol; });
    if (!seen) out.push_back(p);
  }
  return out;
}

double MomentSetPolytope::volume() const {
  const int m = static_cast<int>(generators_.cols());
  double v = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int k = j + 1; k < m; ++k) {
        Mat3 g;
        g << generators_.col(i), generators_.col(j), generators_.col(k);
        v += std::abs(g.determinant());
      }
  return 8.0 * v;
}

std::optional<std::pair<double, double>> MomentSetPolytope::segment_interval(
    const Vec3& from, const Vec3& to, double tolerance) const {
  const double tol = tolerance * scale();
  double lo = 0.0, hi = 1.0;
  for (const Facet& f : facets_) {
    const double a = f.normal.dot(from);
    const double rise = f.normal.dot(to) - a;
    const double room = f.offset + tol - a;  // need s * rise <= room
    if (rise > 0.0) hi = std::min(hi, room / rise);
    else if (rise < 0.0) lo = std::max(lo, room / rise);
    else if (room < 0.0) return std::nullopt;
    if (lo > hi) return std::nullopt;
  }
  return std::make_pair(lo, hi);
}

MomentSetPolytope build_iams(const Mat3X& phi, const IncrementBounds& bounds) {
  const auto m = phi.cols();
  if (bounds.lower.size() != m || bounds.upper.size() != m)
    throw ConfigError("build_iams: bounds size mismatch");
  const VecX mid = 0.5 * (bounds.lower + bounds.upper);
  const VecX half = 0.5 * (bounds.upper - bounds.lower);
  Mat3X gen = phi * half.asDiagonal();
  return MomentSetPolytope(phi * mid, std::move(gen));
}

MomentSetPolytope shrink(const MomentSetPolytope& set, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw DomainError("shrink: factor must be in (0, 1]");
  return MomentSetPolytope(set.center(), set.generators() * factor);
}

}  // namespace floc
