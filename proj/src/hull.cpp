#include "floc/hull.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <utility>

namespace floc {

namespace {

struct Face {
  std::array<int, 3> v;
  Vec3 normal;  // unnormalized, outward
  bool alive = true;
};

Face make_face(const std::vector<Vec3>& pts, int a, int b, int c, const Vec3& inside) {
  Face f{{a, b, c}, (pts[b] - pts[a]).cross(pts[c] - pts[a])};
  if (f.normal.dot(inside - pts[a]) > 0.0) {
    std::swap(f.v[1], f.v[2]);
    f.normal = -f.normal;
  }
  return f;
}

}  // namespace

ConvexHull convex_hull(const std::vector<Vec3>& points, double relative_tolerance) {
  ConvexHull hull;
  hull.points = points;
  const int n = static_cast<int>(points.size());
  if (n < 4) {
    hull.degenerate = true;
    return hull;
  }
  Vec3 lo = points[0], hi = points[0];
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw NumericError("convex_hull: non-finite point");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = (hi - lo).norm();
  const double eps = relative_tolerance * (diag > 0.0 ? diag : 1.0);

  // Initial tetrahedron from extreme points.
  int i0 = 0;
  for (int i = 1; i < n; ++i)
    if (points[i].x() < points[i0].x()) i0 = i;
  int i1 = i0;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = (points[i] - points[i0]).norm();
    if (d > best) best = d, i1 = i;
  }
  if (best <= eps) {
    hull.degenerate = true;
    return hull;
  }
  const Vec3 axis = (points[i1] - points[i0]).normalized();
  int i2 = i0;
  best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = (points[i] - points[i0]).cross(axis).norm();
    if (d > best) best = d, i2 = i;
  }
  if (best <= eps) {
    hull.degenerate = true;
    return hull;
  }
  const Vec3 plane = (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
  int i3 = i0;
  best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(plane.dot(points[i] - points[i0]));
    if (d > best) best = d, i3 = i;
  }
  if (best <= eps) {
    hull.degenerate = true;
    return hull;
  }

  const Vec3 inside = 0.25 * (points[i0] + points[i1] + points[i2] + points[i3]);
  std::vector<Face> faces{make_face(points, i0, i1, i2, inside), make_face(points, i0, i1, i3, inside),
                          make_face(points, i0, i2, i3, inside), make_face(points, i1, i2, i3, inside)};

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(12345);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> visible;
  std::set<std::pair<int, int>> edges;
  for (int idx : order) {
    if (idx == i0 || idx == i1 || idx == i2 || idx == i3) continue;
    const Vec3& p = points[idx];
    visible.clear();
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
      if (!faces[f].alive) continue;
      const Face& F = faces[f];
      if (F.normal.dot(p - points[F.v[0]]) > eps * F.normal.norm()) visible.push_back(f);
    }
    if (visible.empty()) continue;
    edges.clear();
    for (int f : visible) {
      const auto& v = faces[f].v;
      for (int e = 0; e < 3; ++e) edges.emplace(v[e], v[(e + 1) % 3]);
      faces[f].alive = false;
    }
    for (const auto& [a, b] : edges) {
      if (edges.count({b, a})) continue;  // interior edge of the visible region
      Face nf{{a, b, idx}, (points[b] - points[a]).cross(p - points[a])};
      faces.push_back(nf);
    }
    if (faces.size() > 8 * static_cast<std::size_t>(n) + 64) {
      std::erase_if(faces, [](const Face& f) { return !f.alive; });
    }
  }

  double volume = 0.0;
  for (const Face& f : faces) {
    if (!f.alive) continue;
    hull.faces.push_back(f.v);
    const Vec3 a = points[f.v[0]] - inside, b = points[f.v[1]] - inside, c = points[f.v[2]] - inside;
    volume += a.dot(b.cross(c)) / 6.0;
  }
  hull.volume = volume;
  return hull;
}

double hull_volume(const std::vector<Vec3>& points) { return convex_hull(points).volume; }

}  // namespace floc
