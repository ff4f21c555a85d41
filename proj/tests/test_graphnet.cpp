#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "meshfit/graphnet.hpp"
#include "meshfit/mesh.hpp"
#include "meshfit/rng.hpp"

using namespace meshfit;

namespace {

// Raw adjacency of a two-vertex path graph as a standalone operator.
AdjacencyOp path2_adjacency() {
  SparseMat a(2, 2);
  std::vector<Eigen::Triplet<Scalar>> trips{{0, 1, 1.0}, {1, 0, 1.0}};
  a.setFromTriplets(trips.begin(), trips.end());
  return AdjacencyOp{AdjacencyMode::raw, a};
}

AdjacencyOp identity_adjacency(int n) {
  SparseMat a(n, n);
  a.setIdentity();
  return AdjacencyOp{AdjacencyMode::raw, a};
}

LayerParams linear_layer(const MatX& W, int split) {
  LayerParams p;
  p.W = W;
  p.b = VecX::Zero(W.cols());
  p.split_index = split;
  p.activation = Activation::identity;
  return p;
}

Mesh jittered_sphere(seed_t seed, double amp = 0.05) {
  Mesh m = make_ico_sphere(1);
  CounterRng rng(seed);
  uint64_t c = 0;
  for (Eigen::Index v = 0; v < m.vertices.rows(); ++v)
    for (int k = 0; k < 3; ++k) m.vertices(v, k) += amp * rng.normal(c++);
  return m;
}

}  // namespace

TEST_CASE("identity operator with identity weights reproduces the features") {
  MatX h(3, 2);
  h << 1, 2, 3, 4, 5, 6;
  LayerParams p = linear_layer(MatX::Identity(2, 2), 2);
  MatX out = gcn_layer(h, identity_adjacency(3), p);
  CHECK((out - h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("neighbor aggregation swaps features across a two-vertex path") {
  MatX h(2, 1);
  h << 1, 2;
  LayerParams p = linear_layer(MatX::Identity(1, 1), 1);
  MatX out = gcn_layer(h, path2_adjacency(), p);
  CHECK(out(0, 0) == doctest::Approx(2.0));
  CHECK(out(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("zero weights yield the broadcast activated bias") {
  MatX h(4, 3);
  h.setRandom();
  LayerParams p;
  p.W = MatX::Zero(3, 2);
  p.b = VecX::Zero(2);
  p.b << -1.0, 2.0;
  p.split_index = 2;
  p.activation = Activation::relu;
  MatX out = gcn_layer(h, identity_adjacency(4), p);
  for (int i = 0; i < 4; ++i) {
    CHECK(out(i, 0) == 0.0);
    CHECK(out(i, 1) == 2.0);
  }
}

TEST_CASE("split layer aggregates the left block and passes the right through") {
  MatX h(2, 1);
  h << 1, 2;
  MatX w(1, 2);
  w << 1, 1;
  LayerParams p = linear_layer(w, 1);
  MatX out = zn_gcn_layer(h, path2_adjacency(), p);
  REQUIRE(out.rows() == 2);
  REQUIRE(out.cols() == 2);
  CHECK(out(0, 0) == doctest::Approx(2.0));
  CHECK(out(0, 1) == doctest::Approx(1.0));
  CHECK(out(1, 0) == doctest::Approx(1.0));
  CHECK(out(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("full-width split reproduces the plain layer bitwise") {
  Mesh m = jittered_sphere(derive_seed(23, 1));
  AdjacencyOp a = adjacency(m, AdjacencyMode::self_loop_sym_normalized);
  CounterRng rng(derive_seed(23, 2));
  uint64_t c = 0;
  for (int trial = 0; trial < 5; ++trial) {
    int fin = 3 + static_cast<int>(rng.uniform(c++) * 4);
    int fout = 2 + static_cast<int>(rng.uniform(c++) * 5);
    MatX h(m.vertices.rows(), fin);
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      for (int k = 0; k < fin; ++k) h(i, k) = rng.normal(c++);
    LayerParams p;
    p.W = MatX::Zero(fin, fout);
    for (int i = 0; i < fin; ++i)
      for (int j = 0; j < fout; ++j) p.W(i, j) = rng.normal(c++);
    p.b = VecX::Zero(fout);
    for (int j = 0; j < fout; ++j) p.b[j] = rng.normal(c++);
    p.split_index = fout;
    p.activation = Activation::elu;
    MatX full = zn_gcn_layer(h, a, p);
    MatX plain = gcn_layer(h, a, p);
    CHECK((full - plain).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero split index keeps pass-through columns local to each vertex") {
  Mesh m = jittered_sphere(derive_seed(23, 3));
  AdjacencyOp a = adjacency(m, AdjacencyMode::self_loop_sym_normalized);
  MatX h(m.vertices.rows(), 3);
  h = m.vertices;
  LayerParams p = linear_layer(MatX::Identity(3, 3), 0);
  MatX base = zn_gcn_layer(h, a, p);
  MatX h2 = h;
  h2(7, 0) += 10.0;  // perturb one vertex's features
  MatX out = zn_gcn_layer(h2, a, p);
  for (Eigen::Index v = 0; v < h.rows(); ++v) {
    if (v == 7) continue;
    CHECK((out.row(v) - base.row(v)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("layer shape mismatches are rejected") {
  MatX h(2, 3);
  h.setZero();
  LayerParams p = linear_layer(MatX::Identity(2, 2), 2);  // expects 2 input features
  CHECK_THROWS_AS(gcn_layer(h, path2_adjacency(), p), ShapeError);

  LayerParams bad_split = linear_layer(MatX::Identity(3, 3), 4);
  CHECK_THROWS_AS(zn_gcn_layer(h, path2_adjacency(), bad_split), ConfigError);
}

TEST_CASE("vertex maxpool takes the componentwise max over rows") {
  MatX h(2, 2);
  h << 1, 5, 3, 2;
  VecX pooled = vertex_maxpool(h);
  REQUIRE(pooled.size() == 2);
  CHECK(pooled[0] == 3.0);
  CHECK(pooled[1] == 5.0);

  MatX single(1, 4);
  single << -1, 0, 2, 7;
  CHECK((vertex_maxpool(single) - single.row(0).transpose()).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("maxpool is invariant to row permutation") {
  MatX h(6, 3);
  h.setRandom();
  MatX perm(6, 3);
  std::vector<int> order{3, 1, 5, 0, 2, 4};
  for (int i = 0; i < 6; ++i) perm.row(i) = h.row(order[i]);
  CHECK((vertex_maxpool(h) - vertex_maxpool(perm)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mesh encoding is deterministic and vertex-order covariant") {
  Mesh m = jittered_sphere(derive_seed(23, 4));
  EncoderParams enc = make_random_encoder({3, 12, 8}, derive_seed(23, 5));
  VecX e1 = encode_mesh(m, enc);
  VecX e2 = encode_mesh(m, enc);
  CHECK((e1 - e2).cwiseAbs().maxCoeff() == 0.0);

  // Relabel vertices with a rotation permutation and renumber faces to match.
  Eigen::Index n = m.vertices.rows();
  Mesh perm = m;
  for (Eigen::Index v = 0; v < n; ++v)
    perm.vertices.row((v + 5) % n) = m.vertices.row(v);
  for (Eigen::Index f = 0; f < m.faces.rows(); ++f)
    for (int k = 0; k < 3; ++k) perm.faces(f, k) = (m.faces(f, k) + 5) % n;
  VecX ep = encode_mesh(perm, enc);
  CHECK((e1 - ep).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("different shapes get different embeddings") {
  EncoderParams enc = make_default_encoder(derive_seed(23, 6));
  VecX cube = encode_mesh(make_cube(), enc);
  VecX sphere = encode_mesh(make_ico_sphere(1), enc);
  REQUIRE(cube.size() == 50);
  CHECK((cube - sphere).norm() > 1e-6);
}

TEST_CASE("latent loss vanishes when pred equals target") {
  Mesh m = jittered_sphere(derive_seed(23, 7));
  EncoderParams enc = make_random_encoder({3, 10, 6}, derive_seed(23, 8));
  GradientBundle g = loss_latent(m, m, enc);
  CHECK(g.value == 0.0);
  CHECK(g.d_vertices.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scaling the final linear layer scales the latent loss quadratically") {
  Mesh pred = jittered_sphere(derive_seed(23, 9));
  Mesh target = make_cube();
  EncoderParams enc = make_random_encoder({3, 10, 6}, derive_seed(23, 10));
  enc.layers.back().activation = Activation::identity;
  double base = loss_latent(pred, target, enc).value;
  EncoderParams scaled_enc = enc;
  scaled_enc.layers.back().W *= 3.0;
  scaled_enc.layers.back().b *= 3.0;
  double scaled_loss = loss_latent(pred, target, scaled_enc).value;
  CHECK(scaled_loss == doctest::Approx(9.0 * base).epsilon(1e-9));
}

TEST_CASE("encoder serialization round-trips bitwise") {
  EncoderParams enc = make_default_encoder(derive_seed(23, 11));
  auto path = std::filesystem::temp_directory_path() / "meshfit_encoder.txt";
  save_encoder(enc, path.string());
  EncoderParams back = load_encoder(path.string());
  REQUIRE(back.layers.size() == enc.layers.size());
  CHECK(back.adjacency_mode == enc.adjacency_mode);
  for (std::size_t i = 0; i < enc.layers.size(); ++i) {
    CHECK((back.layers[i].W - enc.layers[i].W).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.layers[i].b - enc.layers[i].b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.layers[i].split_index == enc.layers[i].split_index);
    CHECK(back.layers[i].activation == enc.layers[i].activation);
  }
  Mesh m = make_ico_sphere(0);
  CHECK((encode_mesh(m, enc) - encode_mesh(m, back)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoder loader rejects foreign or truncated files") {
  auto dir = std::filesystem::temp_directory_path();
  auto foreign = dir / "meshfit_foreign.txt";
  {
    std::ofstream out(foreign);
    out << "not-an-encoder 7\n";
  }
  CHECK_THROWS_AS(load_encoder(foreign.string()), UnsupportedFormatError);

  EncoderParams enc = make_random_encoder({3, 4, 2}, 1);
  auto full = dir / "meshfit_enc_full.txt";
  save_encoder(enc, full.string());
  std::ifstream in(full.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto truncated = dir / "meshfit_enc_cut.txt";
  {
    std::ofstream out(truncated);
    out << text.substr(0, text.size() / 2);
  }
  CHECK_THROWS_AS(load_encoder(truncated.string()), ParseError);
}

TEST_CASE("toy encoder training is deterministic and learns nothing at lr zero") {
  EncoderTrainReport frozen = train_toy_encoder(5, 0.0, 3);
  EncoderTrainReport init = train_toy_encoder(0, 0.1, 3);
  REQUIRE(frozen.encoder.layers.size() == init.encoder.layers.size());
  for (std::size_t i = 0; i < init.encoder.layers.size(); ++i) {
    CHECK((frozen.encoder.layers[i].W - init.encoder.layers[i].W).cwiseAbs().maxCoeff() ==
          0.0);
  }
  CHECK(frozen.train_meshes == 40);
  CHECK(frozen.holdout_meshes == 20);

  EncoderTrainReport a = train_toy_encoder(20, 0.05, 11);
  EncoderTrainReport b = train_toy_encoder(20, 0.05, 11);
  CHECK(a.holdout_accuracy == b.holdout_accuracy);
  CHECK(a.final_train_loss == b.final_train_loss);
}

TEST_CASE("toy encoder training separates the two shape families") {
  EncoderTrainReport r = train_toy_encoder(60, 0.05, 0);
  CHECK(r.holdout_accuracy >= 0.5);
  CHECK(r.final_train_loss < std::log(2.0) + 0.05);
}
