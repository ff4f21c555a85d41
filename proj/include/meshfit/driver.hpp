#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "meshfit/graphnet.hpp"
#include "meshfit/losses.hpp"
#include "meshfit/mesh.hpp"
#include "meshfit/refine.hpp"
#include "meshfit/types.hpp"

namespace meshfit {

enum class OptimizerKind { gradient_descent, adam };

// Surface term of the objective. vtp exists for the ablation variant that
// replaces sampled-surface losses with the vertex-Chamfer baseline.
enum class LossKind { vtp, ptp, pts };

struct FitConfig {
  int stages = 3;
  int iters_per_stage = 300;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr = 0.01;
  double lr_decay = 0.1;
  int decay_at_iter = -1;  // global iteration where lr is scaled; -1 = last stage start
  LossWeights weights;
  LossKind surface_loss = LossKind::pts;
  int switch_iter = -1;  // global iterations run with ptp before surface_loss; -1 = one stage
  int samples = 2500;
  SplitConfig split;
  bool uniform_split = false;
  bool split_after_last = false;
  seed_t seed = 0;
  const EncoderParams* encoder = nullptr;  // required when weights.gamma1 > 0
  bool freeze_z = false;                   // planar toy runs mask z gradients
  double tau = 1e-4;
  int eval_samples = 50000;
};

struct FitTraceRow {
  int stage;
  int iter;  // global iteration index
  double total, latent, surface, edge, laplacian;
  int vertices, faces;
};

struct FitTrace {
  std::vector<FitTraceRow> rows;
  std::vector<SplitReport> splits;  // one per split event, in order
  Mesh final_mesh;
  double final_f1 = 0.0;
};

// Cascaded deform-then-split optimization of `init`'s vertices against
// `target`. Throws DivergenceError with the offending iteration in the
// message when the loss turns non-finite.
FitTrace fit_mesh(const Mesh& init, const Mesh& target, const FitConfig& config);

// Planar square-to-triangle study: optimizes the 2D square fan's vertices
// under the chosen loss against the 2D triangle fan and reports one IoU per
// seed. z coordinates stay frozen at 0.
std::vector<double> toy_square_triangle(LossKind kind, int n_points, int iters, double lr,
                                        const std::vector<seed_t>& seeds);

enum class AblationVariant { full, gcn_encoder, uniform_split, no_latent, vtp_loss };

struct NamedMesh {
  std::string name;
  Mesh mesh;
};

struct AblationRow {
  AblationVariant variant;
  std::vector<double> per_target_f1;
  std::vector<int> per_target_vertices;
  double mean_f1;
  double mean_vertices;
};

std::vector<AblationRow> ablation_run(const std::vector<AblationVariant>& variants,
                                      const std::vector<NamedMesh>& targets,
                                      const FitConfig& base);

// Randomized gradient verification for one loss family. Configurations whose
// argmin tie margin is too small for the finite-difference stencil to stay on
// one smooth branch are resampled and counted.
struct TrialReport {
  int trials;
  int resampled;
  double max_rel_error;
};

TrialReport run_gradient_trials(const std::string& loss_name, int trials, seed_t seed);

std::vector<NamedMesh> default_ablation_targets();

const char* variant_name(AblationVariant v);
const char* loss_kind_name(LossKind k);

void write_fit_trace_csv(const FitTrace& trace, const std::string& path);
void write_toy_csv(const std::vector<std::tuple<std::string, int, seed_t, double>>& rows,
                   const std::string& path);

}  // namespace meshfit
