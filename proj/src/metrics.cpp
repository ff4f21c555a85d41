#include "meshfit/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "meshfit/errors.hpp"

namespace meshfit {

namespace {

// Sparse voxel hash at cell size sqrt(tau): any point within Euclidean
// distance sqrt(tau) of a query lies in one of the query's 27 neighbor cells.
class PointGrid {
 public:
  PointGrid(const MatX3& points, double cell) : points_(points), cell_(cell) {
    for (int i = 0; i < points.rows(); ++i) cells_[key_of(points.row(i))].push_back(i);
  }

  bool any_within(const Vec3& p, double tau_sq) const {
    const std::int64_t cx = coord(p.x()), cy = coord(p.y()), cz = coord(p.z());
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
          if (it == cells_.end()) continue;
          for (int idx : it->second)
            if ((points_.row(idx).transpose() - p).squaredNorm() <= tau_sq) return true;
        }
    return false;
  }

 private:
  std::int64_t coord(double x) const { return static_cast<std::int64_t>(std::floor(x / cell_)); }

  static std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) {
    constexpr std::uint64_t kOffset = 1ull << 20;
    return ((static_cast<std::uint64_t>(x) + kOffset) << 42) ^
           ((static_cast<std::uint64_t>(y) + kOffset) << 21) ^
           (static_cast<std::uint64_t>(z) + kOffset);
  }

  std::uint64_t key_of(const Vec3& p) const {
    return pack(coord(p.x()), coord(p.y()), coord(p.z()));
  }

  const MatX3& points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

double match_fraction(const MatX3& queries, const PointGrid& grid, double tau) {
  int matched = 0;
  for (int i = 0; i < queries.rows(); ++i)
    if (grid.any_within(queries.row(i), tau)) ++matched;
  return static_cast<double>(matched) / static_cast<double>(queries.rows());
}

}  // namespace

double f1_score(const MatX3& pred_points, const MatX3& target_points, double tau) {
  if (pred_points.rows() == 0 || target_points.rows() == 0)
    throw EmptyInputError("f1 requires non-empty point sets");
  if (tau <= 0) throw ConfigError("tau must be positive");

  const double cell = std::sqrt(tau);
  const PointGrid target_grid(target_points, cell);
  const PointGrid pred_grid(pred_points, cell);
  const double precision = 100.0 * match_fraction(pred_points, target_grid, tau);
  const double recall = 100.0 * match_fraction(target_points, pred_grid, tau);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

struct Tri2D {
  double ax, ay, bx, by, cx, cy;
  double area2;  // twice the signed area

  bool contains(double px, double py) const {
    const double e0 = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    const double e1 = (cx - bx) * (py - by) - (cy - by) * (px - bx);
    const double e2 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx);
    if (area2 > 0) return e0 >= 0 && e1 >= 0 && e2 >= 0;
    return e0 <= 0 && e1 <= 0 && e2 <= 0;
  }
};

std::vector<Tri2D> planar_triangles(const Mesh& mesh) {
  std::vector<Tri2D> tris;
  for (int i = 0; i < mesh.num_vertices(); ++i)
    if (std::abs(mesh.vertices(i, 2)) > 1e-9)
      throw PlanarityError("mesh leaves the z = 0 plane at vertex " + std::to_string(i));
  for (int f = 0; f < mesh.num_faces(); ++f) {
    Tri2D tri;
    tri.ax = mesh.vertices(mesh.faces(f, 0), 0);
    tri.ay = mesh.vertices(mesh.faces(f, 0), 1);
    tri.bx = mesh.vertices(mesh.faces(f, 1), 0);
    tri.by = mesh.vertices(mesh.faces(f, 1), 1);
    tri.cx = mesh.vertices(mesh.faces(f, 2), 0);
    tri.cy = mesh.vertices(mesh.faces(f, 2), 1);
    tri.area2 = (tri.bx - tri.ax) * (tri.cy - tri.ay) - (tri.by - tri.ay) * (tri.cx - tri.ax);
    if (tri.area2 != 0.0) tris.push_back(tri);  // zero-area triangles cover nothing
  }
  return tris;
}

bool covered(const std::vector<Tri2D>& tris, double px, double py) {
  for (const auto& tri : tris)
    if (tri.contains(px, py)) return true;
  return false;
}

}  // namespace

double polygon_iou_2d(const Mesh& mesh_a, const Mesh& mesh_b, int raster_resolution) {
  if (raster_resolution < 64) throw ConfigError("raster resolution must be >= 64");
  const std::vector<Tri2D> tris_a = planar_triangles(mesh_a);
  const std::vector<Tri2D> tris_b = planar_triangles(mesh_b);

  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  for (const Mesh* mesh : {&mesh_a, &mesh_b}) {
    if (mesh->num_vertices() == 0) throw EmptyInputError("IoU requires non-empty meshes");
    lo_x = std::min(lo_x, mesh->vertices.col(0).minCoeff());
    hi_x = std::max(hi_x, mesh->vertices.col(0).maxCoeff());
    lo_y = std::min(lo_y, mesh->vertices.col(1).minCoeff());
    hi_y = std::max(hi_y, mesh->vertices.col(1).maxCoeff());
  }
  const double dx = (hi_x - lo_x) / raster_resolution;
  const double dy = (hi_y - lo_y) / raster_resolution;
  if (dx <= 0 || dy <= 0) return 0.0;

  std::int64_t inter = 0, uni = 0;
  for (int iy = 0; iy < raster_resolution; ++iy) {
    const double py = lo_y + (iy + 0.5) * dy;
    for (int ix = 0; ix < raster_resolution; ++ix) {
      const double px = lo_x + (ix + 0.5) * dx;
      const bool in_a = covered(tris_a, px, py);
      const bool in_b = covered(tris_b, px, py);
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace meshfit
