#pragma once

#include "floc/airframe.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace floc {

/// Deflection increments reachable within one sample period [rad].
struct IncrementBounds {
  VecX lower;
  VecX upper;
};

/// Per-surface increments after one step of length dt from position u0 [rad]:
/// upper = min(rate*dt, max - u0), lower = max(-rate*dt, min - u0).
IncrementBounds incremental_bounds(const VecX& u0_rad, const EffectorSuite& suite, double dt);

struct Facet {
  Vec3 normal;    // outward, unit length
  double offset;  // normal . x <= offset
  double width;   // sum_k |normal . g_k|, zero on a flat direction
};

struct Containment {
  bool inside = false;
  double margin = 0.0;  // 1 at the center, 0 on the boundary, negative outside
};

/// Zonotope c + sum_k [-1, 1] g_k in moment-coefficient space.
class MomentSetPolytope {
 public:
  MomentSetPolytope() = default;
  MomentSetPolytope(const Vec3& center, Mat3X generators);

  const Vec3& center() const { return center_; }
  const Mat3X& generators() const { return generators_; }
  const std::vector<Facet>& facets() const { return facets_; }
  int rank() const { return rank_; }
  bool degenerate() const { return rank_ < 3; }

  Containment contains(const Vec3& point, double tolerance = 1e-10) const;
  /// Vertices of the set (the center alone when every generator vanishes).
  std::vector<Vec3> vertices() const;
  /// Closed-form volume 8 sum_{i<j<k} |det(g_i, g_j, g_k)|.
  double volume() const;
  /// Parameter interval [lo, hi] within [0, 1] for which from + s (to - from)
  /// lies inside, or nullopt when the segment misses the set.
  std::optional<std::pair<double, double>> segment_interval(const Vec3& from, const Vec3& to,
                                                            double tolerance = 1e-10) const;

 private:
  void build_facets();
  double scale() const;

  Vec3 center_ = Vec3::Zero();
  Mat3X generators_ = Mat3X(3, 0);
  std::vector<Facet> facets_;
  int rank_ = 0;
};

/// Incremental attainable moment set for effectiveness `phi` (per rad).
MomentSetPolytope build_iams(const Mat3X& phi, const IncrementBounds& bounds);

/// Scales the generators about the center; factor in (0, 1].
MomentSetPolytope shrink(const MomentSetPolytope& set, double factor);

}  // namespace floc
