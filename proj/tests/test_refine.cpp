#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "meshfit/losses.hpp"
#include "meshfit/mesh.hpp"
#include "meshfit/refine.hpp"
#include "meshfit/rng.hpp"
#include "meshfit/tridist.hpp"

using namespace meshfit;

namespace {

Mesh regular_tetra() {
  Mesh m;
  m.vertices.resize(4, 3);
  m.vertices << 1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1;
  m.faces.resize(4, 3);
  m.faces << 0, 1, 2, 0, 2, 3, 0, 3, 1, 1, 3, 2;
  return m;
}

Mesh single_triangle() {
  Mesh m;
  m.vertices.resize(3, 3);
  m.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  m.faces.resize(1, 3);
  m.faces << 0, 1, 2;
  return m;
}

Mesh jittered_sphere(seed_t seed, double amp) {
  Mesh m = make_ico_sphere(1);
  CounterRng rng(seed);
  uint64_t c = 0;
  for (Eigen::Index v = 0; v < m.vertices.rows(); ++v)
    for (int k = 0; k < 3; ++k) m.vertices(v, k) += amp * rng.normal(c++);
  return m;
}

}  // namespace

TEST_CASE("flat fans are left untouched by the adaptive split") {
  Mesh sq = make_square2d();
  auto [out, report] = split_adaptive(sq, SplitConfig{70.0});
  CHECK(report.split_face_indices.empty());
  CHECK(out.vertices.rows() == sq.vertices.rows());
  CHECK((out.vertices - sq.vertices).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.faces.array() == sq.faces.array()).all());
}

TEST_CASE("a tetrahedron splits every face at the default threshold") {
  Mesh t = regular_tetra();
  auto [out, report] = split_adaptive(t, SplitConfig{70.0});
  CHECK(report.split_face_indices.size() == 4);
  CHECK(report.vertices_before == 4);
  CHECK(report.faces_before == 4);
  CHECK(out.vertices.rows() == 8);
  CHECK(out.faces.rows() == 12);
  CHECK(report.vertices_after == 8);
  CHECK(report.faces_after == 12);
  // Appended vertices are the face centroids, in face order.
  for (int f = 0; f < 4; ++f) {
    Vec3 centroid = (t.vertices.row(t.faces(f, 0)) + t.vertices.row(t.faces(f, 1)) +
                     t.vertices.row(t.faces(f, 2))) /
                    3.0;
    CHECK((out.vertices.row(4 + f).transpose() - centroid).norm() < 1e-15);
  }
}

TEST_CASE("uniform split triples the face count and appends centroids") {
  Mesh c = make_cube();
  auto [out, report] = split_uniform(c);
  CHECK(out.vertices.rows() == 20);
  CHECK(out.faces.rows() == 36);
  CHECK(report.curvatures.size() == 0);

  Mesh tri = single_triangle();
  auto [once, r1] = split_uniform(tri);
  CHECK(once.vertices.rows() == 4);
  CHECK(once.faces.rows() == 3);
  auto [twice, r2] = split_uniform(once);
  CHECK(twice.vertices.rows() == 7);  // 3 + 1 centroid + 3 centroids
  CHECK(twice.faces.rows() == 9);
}

TEST_CASE("split faces connect the centroid to each original edge") {
  Mesh tri = single_triangle();
  auto [out, report] = split_uniform(tri);
  REQUIRE(out.faces.rows() == 3);
  CHECK(out.faces(0, 0) == 0);
  CHECK(out.faces(0, 1) == 1);
  CHECK(out.faces(0, 2) == 3);
  CHECK(out.faces(1, 0) == 1);
  CHECK(out.faces(1, 1) == 2);
  CHECK(out.faces(1, 2) == 3);
  CHECK(out.faces(2, 0) == 2);
  CHECK(out.faces(2, 1) == 0);
  CHECK(out.faces(2, 2) == 3);
}

TEST_CASE("splitting preserves the surface geometry") {
  for (Mesh m : {make_cube(), jittered_sphere(derive_seed(17, 1), 0.03)}) {
    auto [adaptive, ra] = split_adaptive(m, SplitConfig{40.0});
    auto tris = triangle_params(m);
    SampledPointSet pts = sample_surface(adaptive, 300, 5);
    for (int i = 0; i < pts.size(); ++i) {
      Vec3 p = pts.positions.row(i);
      CHECK(point_mesh_sq_dist(p, tris).sq_dist < 1e-18);
    }
    double sym = loss_pts_seeded(adaptive, m, 200, 200, 3, 4).value;
    CHECK(sym < 1e-9);
  }
}

TEST_CASE("adaptive splitting never exceeds the uniform vertex count") {
  Mesh m = jittered_sphere(derive_seed(17, 2), 0.08);
  auto [adaptive, ra] = split_adaptive(m, SplitConfig{70.0});
  auto [uniform, ru] = split_uniform(m);
  CHECK(adaptive.vertices.rows() <= uniform.vertices.rows());
  CHECK(adaptive.faces.rows() <= uniform.faces.rows());
}

TEST_CASE("split decisions use curvatures snapshotted before any split") {
  Mesh m = jittered_sphere(derive_seed(17, 3), 0.1);
  auto [out, report] = split_adaptive(m, SplitConfig{60.0});
  VecX snapshot = face_curvatures(m);
  REQUIRE(report.curvatures.size() == snapshot.size());
  CHECK((report.curvatures - snapshot).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index f = 0; f < snapshot.size(); ++f) {
    bool listed = std::find(report.split_face_indices.begin(),
                            report.split_face_indices.end(),
                            static_cast<int>(f)) != report.split_face_indices.end();
    CHECK(listed == (snapshot[f] > 60.0));
  }
}

TEST_CASE("reversing the face order yields the permuted split result") {
  Mesh m = jittered_sphere(derive_seed(17, 4), 0.1);
  Mesh rev = m;
  for (Eigen::Index f = 0; f < m.faces.rows(); ++f)
    rev.faces.row(f) = m.faces.row(m.faces.rows() - 1 - f);
  auto [a, ra] = split_adaptive(m, SplitConfig{65.0});
  auto [b, rb] = split_adaptive(rev, SplitConfig{65.0});
  CHECK(a.vertices.rows() == b.vertices.rows());
  CHECK(a.faces.rows() == b.faces.rows());
  VecX ca = ra.curvatures;
  VecX cb = rb.curvatures;
  std::sort(ca.data(), ca.data() + ca.size());
  std::sort(cb.data(), cb.data() + cb.size());
  CHECK((ca - cb).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("threshold bounds are enforced") {
  Mesh t = regular_tetra();
  CHECK_THROWS_AS(split_adaptive(t, SplitConfig{0.0}), ConfigError);
  CHECK_THROWS_AS(split_adaptive(t, SplitConfig{180.0}), ConfigError);
  CHECK_THROWS_AS(split_adaptive(t, SplitConfig{-5.0}), ConfigError);
}

TEST_CASE("degenerate faces make the adaptive split fail loudly") {
  Mesh m;
  m.vertices.resize(4, 3);
  m.vertices << 0, 0, 0, 1, 0, 0, 2, 0, 0, 0, 1, 0;
  m.faces.resize(2, 3);
  m.faces << 0, 1, 3, 0, 1, 2;  // second face collinear
  CHECK_THROWS_AS(split_adaptive(m, SplitConfig{70.0}), DegenerateFaceError);
}

TEST_CASE("split report csv has a row per input face") {
  Mesh t = regular_tetra();
  auto [out, report] = split_adaptive(t, SplitConfig{70.0});
  auto path = std::filesystem::temp_directory_path() / "meshfit_split.csv";
  write_split_report_csv(report, path.string());
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "face_idx,curvature,split");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);
}
