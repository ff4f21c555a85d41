#pragma once

#include <string>
#include <vector>

#include "meshfit/errors.hpp"
#include "meshfit/types.hpp"

namespace meshfit {

/// Triangle mesh: vertex coordinates (N x 3) and face vertex indices (F x 3).
/// Values are immutable by convention; operations return new meshes.
struct Mesh {
  MatX3 vertices;
  FaceMat faces;

  int num_vertices() const { return static_cast<int>(vertices.rows()); }
  int num_faces() const { return static_cast<int>(faces.rows()); }
};

/// Checks index ranges and per-face index distinctness; throws ShapeError.
void validate(const Mesh& mesh);

// ---------------------------------------------------------------------------
// Wavefront OBJ I/O (subset: `v x y z` and triangular `f i j k` records;
// `f i/t/n ...` variants accepted, only the position index is read).
// ---------------------------------------------------------------------------

Mesh load_obj(const std::string& path);
/// Writes vertices with 9 significant digits; faces are 1-indexed.
void save_obj(const Mesh& mesh, const std::string& path);

// ---------------------------------------------------------------------------
// Primitive constructors. 3D kinds are closed and consistently wound
// (counter-clockwise seen from outside). 2D kinds live in the z = 0 plane
// and are fan-triangulated from their centroid.
// ---------------------------------------------------------------------------

/// Icosphere of radius 0.5 (inscribed in the unit cube); subdiv >= 0
/// midpoint subdivisions: 12 / 42 / 162 / ... vertices.
Mesh make_ico_sphere(int subdiv);
/// Axis-aligned cube with side 1 centered at the origin; 8 vertices, 12 faces.
Mesh make_cube();
/// Icosphere scaled to semi-axes (a, b, c).
Mesh make_ellipsoid(double a, double b, double c, int subdiv);
/// Unit square [-0.5, 0.5]^2 at z = 0: 4 corners + centroid, 4 faces.
Mesh make_square2d();
/// Triangle (-0.5,-0.5), (0.5,-0.5), (0,0.5) at z = 0: 3 corners + centroid.
Mesh make_triangle2d();
/// Ring torus in the xy-plane, (major + minor) <= 0.5 fits the unit cube.
Mesh make_torus(double major_radius = 0.32, double minor_radius = 0.14,
                int segments_major = 24, int segments_minor = 12);

// ---------------------------------------------------------------------------
// Per-face geometry.
// ---------------------------------------------------------------------------

/// A face is degenerate when its edge cross product has norm < kAreaEps.
inline constexpr double kAreaEps = 1e-12;

/// Unit normal from edge vectors (v1 - v2) and (v3 - v2).
/// For faces wound counter-clockwise seen from outside this points inward;
/// the direction is consistent across a consistently wound mesh, which is
/// all the curvature measure needs. Throws DegenerateFaceError.
Vec3 face_normal(const Mesh& mesh, int face);

double face_area(const Mesh& mesh, int face);

/// Mean angle in degrees between this face's normal and the normals of the
/// faces sharing an edge with it. Range [0, 180]; 0 on coplanar neighborhoods.
/// Throws NoNeighborError when the face has no edge-neighbor.
double face_curvature(const Mesh& mesh, int face);

/// Curvature of every face, reusing one neighbor table.
VecX face_curvatures(const Mesh& mesh);

// ---------------------------------------------------------------------------
// Graph operators.
// ---------------------------------------------------------------------------

enum class AdjacencyMode {
  raw,                          // 0/1 vertex adjacency, zero diagonal
  self_loop_row_normalized,     // rows of (A + I) scaled to sum 1
  self_loop_sym_normalized,     // D^-1/2 (A + I) D^-1/2
};

struct AdjacencyOp {
  AdjacencyMode mode;
  SparseMat matrix;
};

AdjacencyOp adjacency(const Mesh& mesh, AdjacencyMode mode);

/// Undirected edges of all faces, each pair (i < j) exactly once,
/// ordered lexicographically.
EdgeMat edges(const Mesh& mesh);

/// For each vertex, its offset from the mean of its graph neighbors
/// (uniform weights). Throws NoNeighborError on isolated vertices.
MatX3 laplacian_coordinates(const Mesh& mesh);

/// The sparse operator L = I - D^-1 A such that L * V gives
/// laplacian_coordinates(mesh) for vertex matrix V.
SparseMat laplacian_operator(const Mesh& mesh);

/// Neighbor lists. face_neighbors pairs faces sharing an edge.
std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh);
std::vector<std::vector<int>> face_neighbors(const Mesh& mesh);

// ---------------------------------------------------------------------------
// Small transforms used by fitting pipelines.
// ---------------------------------------------------------------------------

Mesh translated(const Mesh& mesh, const Vec3& offset);
Mesh scaled(const Mesh& mesh, const Vec3& factors);
/// Uniformly scales and centers so the bounding box fits [-0.5, 0.5]^3.
Mesh normalized_to_unit_cube(const Mesh& mesh);

}  // namespace meshfit
