#pragma once

#include "meshfit/errors.hpp"
#include "meshfit/mesh.hpp"
#include "meshfit/types.hpp"

namespace meshfit {

// Determinant threshold below which a triangle counts as degenerate.
inline constexpr double kDegenerateDet = 1e-14;

// Triangle as corner B with edge directions E0 = v1 - B, E1 = v2 - B.
// Cached dot products a, b, c feed the quadratic q(s,t) whose minimum over
// {s >= 0, t >= 0, s + t <= 1} is the squared point-triangle distance.
template <typename S>
struct TriangleParamT {
  Vec3T<S> B, E0, E1;
  S a, b, c;

  TriangleParamT(const Vec3T<S>& v0, const Vec3T<S>& v1, const Vec3T<S>& v2)
      : B(v0), E0(v1 - v0), E1(v2 - v0), a(E0.dot(E0)), b(E0.dot(E1)), c(E1.dot(E1)) {}

  S det() const { return a * c - b * b; }
  Vec3T<S> at(S s, S t) const { return B + s * E0 + t * E1; }
};

using TriangleParam = TriangleParamT<double>;

template <typename S>
struct TriangleHitT {
  S sq_dist;
  S s, t;  // argmin in the triangle's (E0, E1) parametrization
};

using TriangleHit = TriangleHitT<double>;

struct MeshHit {
  double sq_dist;
  int face;  // lowest index among ties
  double s, t;
};

// Exact minimum squared distance from p to the triangle. Throws
// DegenerateFaceError when det() <= kDegenerateDet.
TriangleHit point_triangle_sq_dist(const Vec3& p, const TriangleParam& tri);

// As above, but degenerate triangles fall back to the minimum over the three
// boundary segments instead of throwing. (s, t) still parametrize the closest
// point as B + s*E0 + t*E1.
TriangleHit point_triangle_sq_dist_safe(const Vec3& p, const TriangleParam& tri);

// Minimum over all faces, ties broken by lowest face index. Throws
// ZeroAreaError when every face is degenerate.
MeshHit point_mesh_sq_dist(const Vec3& p, const Mesh& mesh);

// Same query against a precomputed parametrization (one entry per face),
// avoiding per-call setup in inner loops.
MeshHit point_mesh_sq_dist(const Vec3& p, const std::vector<TriangleParam>& tris);

std::vector<TriangleParam> triangle_params(const Mesh& mesh);

}  // namespace meshfit
