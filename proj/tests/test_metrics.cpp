#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meshfit/mesh.hpp"
#include "meshfit/metrics.hpp"
#include "meshfit/rng.hpp"
#include "meshfit/sampler.hpp"

using namespace meshfit;

namespace {

MatX3 random_cloud(int n, seed_t seed, double scale = 1.0) {
  MatX3 pts(n, 3);
  CounterRng rng(seed);
  uint64_t c = 0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) pts(i, k) = scale * rng.uniform(c++);
  return pts;
}

// Quadratic-time reference for the same matching rule.
double f1_reference(const MatX3& pred, const MatX3& target, double tau) {
  auto matched = [tau](const MatX3& from, const MatX3& to) {
    int hits = 0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < to.rows(); ++j)
        best = std::min(best, (from.row(i) - to.row(j)).squaredNorm());
      hits += (best <= tau);
    }
    return 100.0 * (static_cast<double>(hits) / static_cast<double>(from.rows()));
  };
  double precision = matched(pred, target);
  double recall = matched(target, pred);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

// Axis-aligned rectangle split into two triangles in the z = 0 plane.
Mesh rect2d(double x0, double y0, double x1, double y1) {
  Mesh m;
  m.vertices.resize(4, 3);
  m.vertices << x0, y0, 0, x1, y0, 0, x1, y1, 0, x0, y1, 0;
  m.faces.resize(2, 3);
  m.faces << 0, 1, 2, 0, 2, 3;
  return m;
}

}  // namespace

TEST_CASE("f1 is 100 for identical clouds and 0 for distant ones") {
  MatX3 pts = random_cloud(200, derive_seed(29, 1));
  CHECK(f1_score(pts, pts, 1e-4) == 100.0);

  MatX3 far = pts;
  far.col(0).array() += 100.0;
  CHECK(f1_score(pts, far, 1e-4) == 0.0);
}

TEST_CASE("f1 matches the closed form for a half-covered target") {
  MatX3 pred(1, 3), target(2, 3);
  pred << 0, 0, 0;
  target << 0, 0, 0, 5, 0, 0;
  // Precision 100, recall 50 -> F1 = 2*100*50/150.
  CHECK(f1_score(pred, target, 1e-4) == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("f1 is symmetric under swapping the clouds") {
  MatX3 a = random_cloud(150, derive_seed(29, 2), 0.2);
  MatX3 b = random_cloud(90, derive_seed(29, 3), 0.2);
  for (double tau : {1e-4, 1e-3, 1e-2}) {
    CHECK(f1_score(a, b, tau) == doctest::Approx(f1_score(b, a, tau)).epsilon(1e-12));
  }
}

TEST_CASE("f1 agrees exactly with a quadratic-time reference") {
  CounterRng rng(derive_seed(29, 4));
  uint64_t c = 0;
  for (int trial = 0; trial < 5; ++trial) {
    MatX3 a = random_cloud(120, derive_seed(29, 100 + trial), 0.15);
    MatX3 b = random_cloud(140, derive_seed(29, 200 + trial), 0.15);
    double tau = 1e-4 * (0.5 + rng.uniform(c++) * 4.0);
    CHECK(f1_score(a, b, tau) == f1_reference(a, b, tau));
  }
}

TEST_CASE("f1 never decreases as the match threshold grows") {
  MatX3 a = random_cloud(200, derive_seed(29, 5), 0.3);
  MatX3 b = random_cloud(200, derive_seed(29, 6), 0.3);
  double prev = 0.0;
  for (double tau : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
    double f1 = f1_score(a, b, tau);
    CHECK(f1 >= prev - 1e-12);
    prev = f1;
  }
}

TEST_CASE("f1 rejects empty inputs and bad thresholds") {
  MatX3 some = random_cloud(5, derive_seed(29, 7));
  MatX3 none(0, 3);
  CHECK_THROWS_AS(f1_score(some, none, 1e-4), EmptyInputError);
  CHECK_THROWS_AS(f1_score(none, some, 1e-4), EmptyInputError);
  CHECK_THROWS_AS(f1_score(some, some, 0.0), ConfigError);
  CHECK_THROWS_AS(f1_score(some, some, -1.0), ConfigError);
}

TEST_CASE("iou of a shape with itself is exactly one") {
  CHECK(polygon_iou_2d(make_square2d(), make_square2d()) == 1.0);
  CHECK(polygon_iou_2d(make_triangle2d(), make_triangle2d()) == 1.0);
}

TEST_CASE("iou of disjoint shapes is zero") {
  Mesh a = rect2d(0, 0, 1, 1);
  Mesh b = rect2d(5, 5, 6, 6);
  CHECK(polygon_iou_2d(a, b) == 0.0);
}

TEST_CASE("iou of a rectangle and its half is one half up to grid error") {
  Mesh whole = rect2d(0, 0, 1, 1);
  Mesh half = rect2d(0, 0, 0.5, 1);
  double iou = polygon_iou_2d(whole, half);
  CHECK(iou == doctest::Approx(0.5).epsilon(2.0 / 512));
}

TEST_CASE("iou stabilizes as the raster resolution doubles") {
  Mesh a = make_square2d();
  Mesh b = make_triangle2d();
  double lo = polygon_iou_2d(a, b, 512);
  double hi = polygon_iou_2d(a, b, 1024);
  CHECK(lo > 0.0);
  CHECK(std::abs(hi - lo) / lo < 0.01);
}

TEST_CASE("iou is insensitive to the triangulation of the same region") {
  Mesh two = rect2d(0, 0, 1, 1);
  Mesh fan;  // same square as a 4-triangle fan around the center
  fan.vertices.resize(5, 3);
  fan.vertices << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0.5, 0.5, 0;
  fan.faces.resize(4, 3);
  fan.faces << 4, 0, 1, 4, 1, 2, 4, 2, 3, 4, 3, 0;
  CHECK(polygon_iou_2d(two, fan) == 1.0);
}

TEST_CASE("iou rejects non-planar meshes and tiny rasters") {
  Mesh flat = make_square2d();
  Mesh lifted = flat;
  lifted.vertices(0, 2) = 1e-6;
  CHECK_THROWS_AS(polygon_iou_2d(flat, lifted), PlanarityError);
  CHECK_THROWS_AS(polygon_iou_2d(flat, flat, 32), ConfigError);
}

TEST_CASE("zero-area triangles contribute nothing to coverage") {
  Mesh a = rect2d(0, 0, 1, 1);
  Mesh b = a;
  b.vertices.conservativeResize(6, 3);
  b.vertices.row(4) = Vec3(2, 0, 0);
  b.vertices.row(5) = Vec3(3, 0, 0);
  b.faces.conservativeResize(3, 3);
  b.faces.row(2) << 1, 4, 5;  // collinear sliver outside the square
  CHECK(polygon_iou_2d(a, b) == 1.0);
}
