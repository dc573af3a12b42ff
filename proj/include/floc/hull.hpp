#pragma once

#include "floc/common.hpp"

#include <array>
#include <vector>

namespace floc {

struct ConvexHull {
  std::vector<Vec3> points;               // input points
  std::vector<std::array<int, 3>> faces;  // outward-oriented triangles into `points`
  double volume = 0.0;
  bool degenerate = false;  // fewer than four affinely independent points
};

/// Incremental 3-D convex hull. Points within a relative tolerance of a
/// face plane count as inside, so coplanar grids are handled.
ConvexHull convex_hull(const std::vector<Vec3>& points, double relative_tolerance = 1e-10);

double hull_volume(const std::vector<Vec3>& points);

}  // namespace floc
