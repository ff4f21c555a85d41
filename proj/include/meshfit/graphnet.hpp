#pragma once

#include <string>
#include <vector>

#include "meshfit/losses.hpp"
#include "meshfit/mesh.hpp"
#include "meshfit/rng.hpp"
#include "meshfit/types.hpp"

namespace meshfit {

enum class Activation { relu, elu, identity };

// One graph-convolution layer. Columns [0, split_index) of H*W aggregate
// neighbors through A; columns [split_index, F') pass through per vertex.
// split_index == F' recovers the plain layer sigma(A*H*W + b).
struct LayerParams {
  MatX W;          // F x F'
  VecX b;          // F'
  int split_index;  // in [0, F']
  Activation activation = Activation::elu;
};

struct EncoderParams {
  std::vector<LayerParams> layers;
  AdjacencyMode adjacency_mode = AdjacencyMode::self_loop_sym_normalized;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.rows()); }
  int embedding_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.back().W.cols());
  }
};

// sigma(A*H*W + b); split_index is ignored.
MatX gcn_layer(const MatX& H, const AdjacencyOp& A, const LayerParams& params);

// H' = H*W; output = sigma([A*H'[:, 0:i] | H'[:, i:]] + b).
MatX zn_gcn_layer(const MatX& H, const AdjacencyOp& A, const LayerParams& params);

// Componentwise max over vertex rows.
VecX vertex_maxpool(const MatX& H);

// Stacked zn_gcn_layer passes on per-vertex (x, y, z) features, then maxpool.
VecX encode_mesh(const Mesh& mesh, const EncoderParams& encoder);

// || E(target) - E(pred) ||^2 with gradient w.r.t. predicted vertices.
// tie_margin reports the smallest maxpool winner gap (and, for relu layers,
// the smallest pre-activation magnitude) seen on the predicted mesh's pass.
GradientBundle loss_latent(const Mesh& pred, const Mesh& target,
                           const EncoderParams& encoder, double* tie_margin = nullptr);

// Random small-weight encoder over the given widths (widths.front() is the
// input feature dimension). Hidden layers split their columns half and half;
// the final layer emits the embedding.
EncoderParams make_random_encoder(const std::vector<int>& widths, seed_t seed,
                                  Activation activation = Activation::elu);

// Desk-scale default: widths 3 -> 32 -> 32 -> 32 -> 50, ELU.
EncoderParams make_default_encoder(seed_t seed);

void save_encoder(const EncoderParams& encoder, const std::string& path);
EncoderParams load_encoder(const std::string& path);

// Toy shape-family training: random cube-family and sphere-family meshes,
// encoder plus a linear softmax head trained jointly. Reported accuracy is
// nearest-centroid classification of held-out embeddings.
struct EncoderTrainReport {
  EncoderParams encoder;
  double holdout_accuracy;   // in [0, 1]
  double final_train_loss;
  int train_meshes;
  int holdout_meshes;
};

EncoderTrainReport train_toy_encoder(int steps, double lr, seed_t seed);

}  // namespace meshfit
