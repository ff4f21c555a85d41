#include "meshfit/tridist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace meshfit {

namespace {

// Minimizes q over the clamped domain region by region; the boundary cases
// reduce to clamped 1D quadratics in one unknown.
TriangleHit solve_regions(const Vec3& p, const TriangleParam& tri) {
  const Vec3 diff = tri.B - p;
  const double a = tri.a, b = tri.b, c = tri.c;
  const double d = tri.E0.dot(diff);
  const double e = tri.E1.dot(diff);
  const double det = a * c - b * b;
  double s = b * e - c * d;
  double t = b * d - a * e;

  if (s + t <= det) {
    if (s < 0) {
      if (t < 0) {  // closest to corner B or one of its edges
        if (d < 0) {
          t = 0;
          s = (-d >= a) ? 1 : -d / a;
        } else {
          s = 0;
          t = (e >= 0) ? 0 : ((-e >= c) ? 1 : -e / c);
        }
      } else {  // edge s = 0
        s = 0;
        t = (e >= 0) ? 0 : ((-e >= c) ? 1 : -e / c);
      }
    } else if (t < 0) {  // edge t = 0
      t = 0;
      s = (d >= 0) ? 0 : ((-d >= a) ? 1 : -d / a);
    } else {  // interior minimum
      s /= det;
      t /= det;
    }
  } else {
    if (s < 0) {  // corner at t = 1 or the s + t = 1 edge
      const double tmp0 = b + d, tmp1 = c + e;
      if (tmp1 > tmp0) {
        const double numer = tmp1 - tmp0;
        const double denom = a - 2 * b + c;
        s = (numer >= denom) ? 1 : numer / denom;
        t = 1 - s;
      } else {
        s = 0;
        t = (tmp1 <= 0) ? 1 : ((e >= 0) ? 0 : -e / c);
      }
    } else if (t < 0) {  // corner at s = 1 or the s + t = 1 edge
      const double tmp0 = b + e, tmp1 = a + d;
      if (tmp1 > tmp0) {
        const double numer = tmp1 - tmp0;
        const double denom = a - 2 * b + c;
        t = (numer >= denom) ? 1 : numer / denom;
        s = 1 - t;
      } else {
        t = 0;
        s = (tmp1 <= 0) ? 1 : ((d >= 0) ? 0 : -d / a);
      }
    } else {  // edge s + t = 1
      const double numer = c + e - b - d;
      if (numer <= 0) {
        s = 0;
      } else {
        const double denom = a - 2 * b + c;
        s = (numer >= denom) ? 1 : numer / denom;
      }
      t = 1 - s;
    }
  }
  const Vec3 closest = tri.at(s, t);
  return {(p - closest).squaredNorm(), s, t};
}

struct SegmentHit {
  double sq_dist;
  double tau;  // clamped parameter along the segment
};

SegmentHit point_segment_sq_dist(const Vec3& p, const Vec3& a0, const Vec3& a1) {
  const Vec3 dir = a1 - a0;
  const double len2 = dir.squaredNorm();
  double tau = 0.0;
  if (len2 > 0.0) tau = std::clamp((p - a0).dot(dir) / len2, 0.0, 1.0);
  const Vec3 closest = a0 + tau * dir;
  return {(p - closest).squaredNorm(), tau};
}

}  // namespace

TriangleHit point_triangle_sq_dist(const Vec3& p, const TriangleParam& tri) {
  if (tri.det() <= kDegenerateDet)
    throw DegenerateFaceError("triangle is degenerate (det <= 1e-14)", -1);
  return solve_regions(p, tri);
}

TriangleHit point_triangle_sq_dist_safe(const Vec3& p, const TriangleParam& tri) {
  if (tri.det() > kDegenerateDet) return solve_regions(p, tri);
  // A degenerate triangle is its boundary; take the closest of the three
  // segments, first-listed segment winning ties.
  const Vec3 v0 = tri.B, v1 = tri.B + tri.E0, v2 = tri.B + tri.E1;
  const SegmentHit h01 = point_segment_sq_dist(p, v0, v1);
  const SegmentHit h02 = point_segment_sq_dist(p, v0, v2);
  const SegmentHit h12 = point_segment_sq_dist(p, v1, v2);
  TriangleHit best{h01.sq_dist, h01.tau, 0.0};
  if (h02.sq_dist < best.sq_dist) best = {h02.sq_dist, 0.0, h02.tau};
  if (h12.sq_dist < best.sq_dist) best = {h12.sq_dist, 1.0 - h12.tau, h12.tau};
  return best;
}

std::vector<TriangleParam> triangle_params(const Mesh& mesh) {
  std::vector<TriangleParam> tris;
  tris.reserve(static_cast<std::size_t>(mesh.num_faces()));
  for (int f = 0; f < mesh.num_faces(); ++f)
    tris.emplace_back(Vec3(mesh.vertices.row(mesh.faces(f, 0))),
                      Vec3(mesh.vertices.row(mesh.faces(f, 1))),
                      Vec3(mesh.vertices.row(mesh.faces(f, 2))));
  return tris;
}

MeshHit point_mesh_sq_dist(const Vec3& p, const std::vector<TriangleParam>& tris) {
  bool any_valid = false;
  for (const auto& tri : tris)
    if (tri.det() > kDegenerateDet) {
      any_valid = true;
      break;
    }
  if (!any_valid) throw ZeroAreaError("mesh has no non-degenerate face");

  MeshHit best{std::numeric_limits<double>::infinity(), -1, 0.0, 0.0};
  for (int f = 0; f < static_cast<int>(tris.size()); ++f) {
    const TriangleHit hit = point_triangle_sq_dist_safe(p, tris[f]);
    if (hit.sq_dist < best.sq_dist) best = {hit.sq_dist, f, hit.s, hit.t};
  }
  return best;
}

MeshHit point_mesh_sq_dist(const Vec3& p, const Mesh& mesh) {
  return point_mesh_sq_dist(p, triangle_params(mesh));
}

}  // namespace meshfit
