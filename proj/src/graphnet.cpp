#include "meshfit/graphnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "meshfit/errors.hpp"

namespace meshfit {

namespace {

double activate(double x, Activation act) {
  switch (act) {
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::elu: return x > 0 ? x : std::expm1(x);
    case Activation::identity: return x;
  }
  return x;
}

// Derivative w.r.t. the pre-activation value x.
double activate_deriv(double x, Activation act) {
  switch (act) {
    case Activation::relu: return x > 0 ? 1.0 : 0.0;
    case Activation::elu: return x > 0 ? 1.0 : std::exp(x);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

void check_layer_shapes(const MatX& H, const AdjacencyOp& A, const LayerParams& params) {
  if (H.cols() != params.W.rows())
    throw ShapeError("feature width " + std::to_string(H.cols()) +
                     " does not match weight rows " + std::to_string(params.W.rows()));
  if (params.b.size() != params.W.cols())
    throw ShapeError("bias length does not match weight columns");
  if (A.matrix.rows() != H.rows() || A.matrix.cols() != H.rows())
    throw ShapeError("adjacency size does not match vertex count");
  if (params.split_index < 0 || params.split_index > params.W.cols())
    throw ConfigError("split index out of range [0, output width]");
}

struct LayerCache {
  MatX H_in;
  MatX Hp;  // H_in * W
  MatX M;   // pre-activation
};

MatX layer_forward(const MatX& H, const AdjacencyOp& A, const LayerParams& params,
                   LayerCache* cache) {
  check_layer_shapes(H, A, params);
  const int i = params.split_index;
  MatX Hp = H * params.W;
  MatX M(Hp.rows(), Hp.cols());
  if (i > 0) M.leftCols(i) = A.matrix * Hp.leftCols(i);
  if (i < Hp.cols()) M.rightCols(Hp.cols() - i) = Hp.rightCols(Hp.cols() - i);
  M.rowwise() += params.b.transpose();
  MatX out = M.unaryExpr([&](double x) { return activate(x, params.activation); });
  if (cache) {
    cache->H_in = H;
    cache->Hp = std::move(Hp);
    cache->M = std::move(M);
  }
  return out;
}

// Backpropagates d_out through one layer; optionally accumulates parameter
// gradients.
MatX layer_backward(const MatX& d_out, const AdjacencyOp& A, const LayerParams& params,
                    const LayerCache& cache, MatX* dW, VecX* db) {
  MatX dM = d_out.cwiseProduct(
      cache.M.unaryExpr([&](double x) { return activate_deriv(x, params.activation); }));
  const int i = params.split_index;
  MatX dHp(dM.rows(), dM.cols());
  if (i > 0) dHp.leftCols(i) = A.matrix.transpose() * dM.leftCols(i);
  if (i < dM.cols()) dHp.rightCols(dM.cols() - i) = dM.rightCols(dM.cols() - i);
  if (db) *db += dM.colwise().sum().transpose();
  if (dW) *dW += cache.H_in.transpose() * dHp;
  return dHp * params.W.transpose();
}

struct ForwardPass {
  std::vector<LayerCache> caches;
  MatX final_H;
  VecX embedding;
  std::vector<int> argmax;
  double pool_margin;  // smallest max-vs-runner-up gap across columns
  double relu_margin;  // smallest |pre-activation| across relu layers
};

ForwardPass run_forward(const MatX& H0, const AdjacencyOp& A, const EncoderParams& encoder) {
  if (H0.rows() == 0) throw EmptyInputError("encoder requires at least one vertex");
  if (encoder.layers.empty()) throw ConfigError("encoder has no layers");
  ForwardPass pass;
  pass.caches.resize(encoder.layers.size());
  pass.relu_margin = std::numeric_limits<double>::infinity();
  MatX H = H0;
  for (std::size_t l = 0; l < encoder.layers.size(); ++l) {
    H = layer_forward(H, A, encoder.layers[l], &pass.caches[l]);
    if (encoder.layers[l].activation == Activation::relu)
      pass.relu_margin = std::min(pass.relu_margin, pass.caches[l].M.cwiseAbs().minCoeff());
  }
  pass.final_H = std::move(H);

  const int cols = static_cast<int>(pass.final_H.cols());
  pass.embedding.resize(cols);
  pass.argmax.resize(cols);
  pass.pool_margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < cols; ++j) {
    int best = 0;
    double best_v = pass.final_H(0, j);
    double second_v = -std::numeric_limits<double>::infinity();
    for (int r = 1; r < pass.final_H.rows(); ++r) {
      const double v = pass.final_H(r, j);
      if (v > best_v) {
        second_v = best_v;
        best_v = v;
        best = r;
      } else if (v > second_v) {
        second_v = v;
      }
    }
    pass.embedding[j] = best_v;
    pass.argmax[j] = best;
    if (pass.final_H.rows() > 1)
      pass.pool_margin = std::min(pass.pool_margin, best_v - second_v);
  }
  return pass;
}

struct ParamGrads {
  std::vector<MatX> dW;
  std::vector<VecX> db;
};

ParamGrads zero_grads(const EncoderParams& encoder) {
  ParamGrads grads;
  for (const auto& layer : encoder.layers) {
    grads.dW.push_back(MatX::Zero(layer.W.rows(), layer.W.cols()));
    grads.db.push_back(VecX::Zero(layer.b.size()));
  }
  return grads;
}

// d_emb routed through the pool to its argmax rows, then back to H0.
MatX run_backward(const ForwardPass& pass, const AdjacencyOp& A, const EncoderParams& encoder,
                  const VecX& d_emb, ParamGrads* grads) {
  MatX dH = MatX::Zero(pass.final_H.rows(), pass.final_H.cols());
  for (int j = 0; j < d_emb.size(); ++j) dH(pass.argmax[j], j) = d_emb[j];
  for (int l = static_cast<int>(encoder.layers.size()) - 1; l >= 0; --l)
    dH = layer_backward(dH, A, encoder.layers[l], pass.caches[l],
                        grads ? &grads->dW[l] : nullptr, grads ? &grads->db[l] : nullptr);
  return dH;
}

}  // namespace

MatX gcn_layer(const MatX& H, const AdjacencyOp& A, const LayerParams& params) {
  LayerParams full = params;
  full.split_index = static_cast<int>(params.W.cols());
  return layer_forward(H, A, full, nullptr);
}

MatX zn_gcn_layer(const MatX& H, const AdjacencyOp& A, const LayerParams& params) {
  return layer_forward(H, A, params, nullptr);
}

VecX vertex_maxpool(const MatX& H) {
  if (H.rows() == 0) throw EmptyInputError("maxpool requires at least one row");
  return H.colwise().maxCoeff().transpose();
}

VecX encode_mesh(const Mesh& mesh, const EncoderParams& encoder) {
  const AdjacencyOp A = adjacency(mesh, encoder.adjacency_mode);
  return run_forward(mesh.vertices, A, encoder).embedding;
}

GradientBundle loss_latent(const Mesh& pred, const Mesh& target, const EncoderParams& encoder,
                           double* tie_margin) {
  const AdjacencyOp A_target = adjacency(target, encoder.adjacency_mode);
  const VecX e_target = run_forward(target.vertices, A_target, encoder).embedding;

  const AdjacencyOp A_pred = adjacency(pred, encoder.adjacency_mode);
  const ForwardPass pass = run_forward(pred.vertices, A_pred, encoder);

  const VecX diff = pass.embedding - e_target;
  GradientBundle out;
  out.value = diff.squaredNorm();
  out.d_vertices = run_backward(pass, A_pred, encoder, 2.0 * diff, nullptr);
  if (tie_margin) *tie_margin = std::min({*tie_margin, pass.pool_margin, pass.relu_margin});
  return out;
}

EncoderParams make_random_encoder(const std::vector<int>& widths, seed_t seed,
                                  Activation activation) {
  if (widths.size() < 2) throw ConfigError("encoder needs at least input and output widths");
  for (int w : widths)
    if (w < 1) throw ConfigError("encoder widths must be positive");
  EncoderParams encoder;
  const CounterRng rng(seed);
  std::uint64_t counter = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    LayerParams layer;
    const int fan_in = widths[l], fan_out = widths[l + 1];
    const double scale = std::sqrt(1.0 / fan_in);
    layer.W.resize(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r)
      for (int c = 0; c < fan_out; ++c) layer.W(r, c) = scale * rng.normal(counter++);
    layer.b = VecX::Zero(fan_out);
    layer.split_index = fan_out / 2;
    layer.activation = activation;
    encoder.layers.push_back(std::move(layer));
  }
  return encoder;
}

EncoderParams make_default_encoder(seed_t seed) {
  return make_random_encoder({3, 32, 32, 32, 50}, seed, Activation::elu);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::identity: return "identity";
  }
  return "elu";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "elu") return Activation::elu;
  if (name == "identity") return Activation::identity;
  throw ParseError("unknown activation '" + name + "'", 0);
}

const char* adjacency_name(AdjacencyMode mode) {
  switch (mode) {
    case AdjacencyMode::raw: return "raw";
    case AdjacencyMode::self_loop_row_normalized: return "row";
    case AdjacencyMode::self_loop_sym_normalized: return "sym";
  }
  return "sym";
}

AdjacencyMode parse_adjacency(const std::string& name) {
  if (name == "raw") return AdjacencyMode::raw;
  if (name == "row") return AdjacencyMode::self_loop_row_normalized;
  if (name == "sym") return AdjacencyMode::self_loop_sym_normalized;
  throw ParseError("unknown adjacency mode '" + name + "'", 0);
}

}  // namespace

void save_encoder(const EncoderParams& encoder, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "meshfit-encoder 1\n";
  out << "adjacency " << adjacency_name(encoder.adjacency_mode) << '\n';
  out << "layers " << encoder.layers.size() << '\n';
  char buf[48];
  for (const auto& layer : encoder.layers) {
    out << "layer " << layer.W.rows() << ' ' << layer.W.cols() << ' ' << layer.split_index
        << ' ' << activation_name(layer.activation) << '\n';
    for (int r = 0; r < layer.W.rows(); ++r) {
      for (int c = 0; c < layer.W.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", layer.W(r, c));
        out << buf << (c + 1 == layer.W.cols() ? "" : " ");
      }
      out << '\n';
    }
    for (int c = 0; c < layer.b.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", layer.b[c]);
      out << buf << (c + 1 == layer.b.size() ? "" : " ");
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

EncoderParams load_encoder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "meshfit-encoder" || version != 1)
    throw UnsupportedFormatError("not a meshfit encoder file: " + path);

  std::string key, value;
  if (!(in >> key >> value) || key != "adjacency")
    throw ParseError("expected adjacency line", 0);
  EncoderParams encoder;
  encoder.adjacency_mode = parse_adjacency(value);

  int n_layers = 0;
  if (!(in >> key >> n_layers) || key != "layers" || n_layers < 1)
    throw ParseError("expected layers count", 0);
  for (int l = 0; l < n_layers; ++l) {
    int rows = 0, cols = 0, split = 0;
    std::string act;
    if (!(in >> key >> rows >> cols >> split >> act) || key != "layer" || rows < 1 || cols < 1)
      throw ParseError("malformed layer header", 0);
    LayerParams layer;
    layer.W.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (!(in >> layer.W(r, c))) throw ParseError("truncated weight matrix", 0);
    layer.b.resize(cols);
    for (int c = 0; c < cols; ++c)
      if (!(in >> layer.b[c])) throw ParseError("truncated bias vector", 0);
    if (split < 0 || split > cols) throw ConfigError("split index out of range");
    layer.split_index = split;
    layer.activation = parse_activation(act);
    encoder.layers.push_back(std::move(layer));
  }
  return encoder;
}

// ---------------------------------------------------------------------------
// Toy family training
// ---------------------------------------------------------------------------

namespace {

Mesh jittered_family_mesh(bool is_cube, const CounterRng& rng, std::uint64_t* counter) {
  Mesh mesh = is_cube ? make_cube() : make_ico_sphere(0);
  Vec3 scale;
  for (int k = 0; k < 3; ++k) scale[k] = 0.6 + 0.8 * rng.uniform((*counter)++);
  mesh = scaled(mesh, scale);
  for (int i = 0; i < mesh.num_vertices(); ++i)
    for (int k = 0; k < 3; ++k) mesh.vertices(i, k) += 0.02 * rng.normal((*counter)++);
  return mesh;
}

}  // namespace

EncoderTrainReport train_toy_encoder(int steps, double lr, seed_t seed) {
  if (steps < 0) throw ConfigError("step count must be >= 0");
  const CounterRng rng(derive_seed(seed, 101));
  std::uint64_t counter = 0;

  constexpr int kTrainPerFamily = 20;
  constexpr int kHoldoutPerFamily = 10;
  std::vector<Mesh> train, holdout;
  std::vector<int> train_label, holdout_label;
  for (int family = 0; family < 2; ++family) {
    for (int i = 0; i < kTrainPerFamily; ++i) {
      train.push_back(jittered_family_mesh(family == 0, rng, &counter));
      train_label.push_back(family);
    }
    for (int i = 0; i < kHoldoutPerFamily; ++i) {
      holdout.push_back(jittered_family_mesh(family == 0, rng, &counter));
      holdout_label.push_back(family);
    }
  }

  EncoderParams encoder = make_default_encoder(derive_seed(seed, 102));
  const int dim = encoder.embedding_dim();

  // Linear softmax head over the two families.
  MatX head_W(2, dim);
  VecX head_b = VecX::Zero(2);
  const CounterRng head_rng(derive_seed(seed, 103));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < dim; ++c)
      head_W(r, c) = 0.1 * head_rng.normal(static_cast<std::uint64_t>(r) * dim + c);

  std::vector<AdjacencyOp> train_adj;
  train_adj.reserve(train.size());
  for (const auto& mesh : train) train_adj.push_back(adjacency(mesh, encoder.adjacency_mode));

  double train_loss = 0.0;
  for (int step = 0; step < steps; ++step) {
    ParamGrads grads = zero_grads(encoder);
    MatX d_head_W = MatX::Zero(2, dim);
    VecX d_head_b = VecX::Zero(2);
    train_loss = 0.0;

    for (std::size_t m = 0; m < train.size(); ++m) {
      const ForwardPass pass = run_forward(train[m].vertices, train_adj[m], encoder);
      const VecX logits = head_W * pass.embedding + head_b;
      const double peak = logits.maxCoeff();
      const VecX expv = (logits.array() - peak).exp();
      const VecX prob = expv / expv.sum();
      train_loss -= std::log(std::max(prob[train_label[m]], 1e-300));

      VecX d_logits = prob;
      d_logits[train_label[m]] -= 1.0;
      d_head_W += d_logits * pass.embedding.transpose();
      d_head_b += d_logits;
      const VecX d_emb = head_W.transpose() * d_logits;
      run_backward(pass, train_adj[m], encoder, d_emb, &grads);
    }

    const double scale = lr / static_cast<double>(train.size());
    for (std::size_t l = 0; l < encoder.layers.size(); ++l) {
      encoder.layers[l].W -= scale * grads.dW[l];
      encoder.layers[l].b -= scale * grads.db[l];
    }
    head_W -= scale * d_head_W;
    head_b -= scale * d_head_b;
  }
  train_loss /= static_cast<double>(train.size());

  // Nearest-centroid evaluation on held-out meshes.
  std::vector<VecX> centroids(2, VecX::Zero(dim));
  std::vector<int> counts(2, 0);
  for (std::size_t m = 0; m < train.size(); ++m) {
    centroids[train_label[m]] += encode_mesh(train[m], encoder);
    ++counts[train_label[m]];
  }
  for (int family = 0; family < 2; ++family) centroids[family] /= std::max(counts[family], 1);

  int correct = 0;
  for (std::size_t m = 0; m < holdout.size(); ++m) {
    const VecX emb = encode_mesh(holdout[m], encoder);
    const int pick =
        (emb - centroids[0]).squaredNorm() <= (emb - centroids[1]).squaredNorm() ? 0 : 1;
    if (pick == holdout_label[m]) ++correct;
  }

  EncoderTrainReport report;
  report.encoder = std::move(encoder);
  report.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(holdout.size());
  report.final_train_loss = train_loss;
  report.train_meshes = static_cast<int>(train.size());
  report.holdout_meshes = static_cast<int>(holdout.size());
  return report;
}

}  // namespace meshfit
