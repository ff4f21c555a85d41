#include "meshfit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meshfit/errors.hpp"
#include "meshfit/graphnet.hpp"
#include "meshfit/tridist.hpp"

namespace meshfit {

namespace {

constexpr std::uint64_t kPtpPredTag = 1;
constexpr std::uint64_t kPtpTargetTag = 2;
constexpr std::uint64_t kPtsPredTag = 3;
constexpr std::uint64_t kPtsTargetTag = 4;

void shrink_margin(double* margin, double candidate) {
  if (margin && candidate < *margin) *margin = candidate;
}

// Nearest and runner-up squared distances from one point to a row set.
struct NearestPair {
  int idx;
  double best;
  double second;
};

NearestPair nearest_in(const Vec3& p, const MatX3& rows) {
  NearestPair result{-1, std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity()};
  for (int i = 0; i < rows.rows(); ++i) {
    const double d = (rows.row(i).transpose() - p).squaredNorm();
    if (d < result.best) {
      result.second = result.best;
      result.best = d;
      result.idx = i;
    } else if (d < result.second) {
      result.second = d;
    }
  }
  return result;
}

// Margin between the best face and the nearest face with a *different*
// closest point. Faces meeting the winner at a shared edge or vertex produce
// the same closest point, hence the same value and gradient; such ties are
// exact and harmless, so they do not count.
void face_tie_margin(const Vec3& p, const std::vector<TriangleParam>& tris,
                     const MeshHit& best, double* margin) {
  if (!margin) return;
  const Vec3 c_best = tris[best.face].at(best.s, best.t);
  for (int f = 0; f < static_cast<int>(tris.size()); ++f) {
    if (f == best.face) continue;
    const TriangleHit hit = point_triangle_sq_dist_safe(p, tris[f]);
    const Vec3 c = tris[f].at(hit.s, hit.t);
    if ((c - c_best).squaredNorm() > 1e-12)
      shrink_margin(margin, hit.sq_dist - best.sq_dist);
  }
}

}  // namespace

ChamferResult chamfer_points(const MatX3& first, const MatX3& second, double* tie_margin) {
  if (first.rows() == 0 || second.rows() == 0)
    throw EmptyInputError("chamfer requires non-empty point sets");
  ChamferResult result;
  result.value = 0.0;
  result.d_second = MatX3::Zero(second.rows(), 3);

  for (int i = 0; i < first.rows(); ++i) {
    const Vec3 p = first.row(i);
    const NearestPair near = nearest_in(p, second);
    result.value += near.best;
    result.d_second.row(near.idx) += 2.0 * (second.row(near.idx) - first.row(i));
    if (second.rows() > 1) shrink_margin(tie_margin, near.second - near.best);
  }
  for (int j = 0; j < second.rows(); ++j) {
    const Vec3 q = second.row(j);
    const NearestPair near = nearest_in(q, first);
    result.value += near.best;
    result.d_second.row(j) += 2.0 * (second.row(j) - first.row(near.idx));
    if (first.rows() > 1) shrink_margin(tie_margin, near.second - near.best);
  }
  return result;
}

GradientBundle loss_vtp(const Mesh& pred, const MatX3& target_points, double* tie_margin) {
  const ChamferResult chamfer = chamfer_points(target_points, pred.vertices, tie_margin);
  return {chamfer.value, chamfer.d_second};
}

GradientBundle loss_ptp_sampled(const Mesh& pred, const SampledPointSet& pred_draws,
                                const MatX3& target_positions, double* tie_margin) {
  const MatX3 pred_positions = sample_positions(pred_draws, pred);
  const ChamferResult chamfer = chamfer_points(target_positions, pred_positions, tie_margin);

  GradientBundle out;
  out.value = chamfer.value;
  out.d_vertices = MatX3::Zero(pred.num_vertices(), 3);
  const MatX3 weights = sample_jacobian(pred_draws, pred);
  for (int i = 0; i < pred_draws.size(); ++i) {
    const int f = pred_draws.face_idx[i];
    for (int k = 0; k < 3; ++k)
      out.d_vertices.row(pred.faces(f, k)) += weights(i, k) * chamfer.d_second.row(i);
  }
  return out;
}

GradientBundle loss_ptp_seeded(const Mesh& pred, const Mesh& target, int n, seed_t pred_seed,
                               seed_t target_seed, double* tie_margin) {
  const SampledPointSet pred_draws = sample_surface(pred, n, pred_seed);
  const SampledPointSet target_points = sample_surface(target, n, target_seed);
  return loss_ptp_sampled(pred, pred_draws, target_points.positions, tie_margin);
}

GradientBundle loss_ptp(const Mesh& pred, const Mesh& target, int n, seed_t seed,
                        double* tie_margin) {
  return loss_ptp_seeded(pred, target, n, derive_seed(seed, kPtpPredTag),
                         derive_seed(seed, kPtpTargetTag), tie_margin);
}

GradientBundle loss_pts_sampled(const Mesh& pred, const SampledPointSet& pred_draws,
                                const Mesh& target, const MatX3& target_positions,
                                double* tie_margin, PtsBreakdown* breakdown) {
  const std::vector<TriangleParam> pred_tris = triangle_params(pred);
  const std::vector<TriangleParam> target_tris = triangle_params(target);

  GradientBundle out;
  out.value = 0.0;
  out.d_vertices = MatX3::Zero(pred.num_vertices(), 3);

  // Target samples against the predicted surface; gradient enters through
  // the closest point's barycentric placement on the predicted face.
  double target_to_pred = 0.0;
  for (int i = 0; i < target_positions.rows(); ++i) {
    const Vec3 p = target_positions.row(i);
    const MeshHit hit = point_mesh_sq_dist(p, pred_tris);
    target_to_pred += hit.sq_dist;
    face_tie_margin(p, pred_tris, hit, tie_margin);

    const Vec3 closest = pred_tris[hit.face].at(hit.s, hit.t);
    const Vec3 d_closest = 2.0 * (closest - p);
    const double w[3] = {1.0 - hit.s - hit.t, hit.s, hit.t};
    for (int k = 0; k < 3; ++k)
      out.d_vertices.row(pred.faces(hit.face, k)) += w[k] * d_closest.transpose();
  }

  // Predicted samples against the target surface; gradient enters through
  // the reparametrized sample position.
  double pred_to_target = 0.0;
  const MatX3 pred_positions = sample_positions(pred_draws, pred);
  const MatX3 weights = sample_jacobian(pred_draws, pred);
  for (int i = 0; i < pred_draws.size(); ++i) {
    const Vec3 q = pred_positions.row(i);
    const MeshHit hit = point_mesh_sq_dist(q, target_tris);
    pred_to_target += hit.sq_dist;
    face_tie_margin(q, target_tris, hit, tie_margin);

    const Vec3 closest = target_tris[hit.face].at(hit.s, hit.t);
    const Vec3 d_sample = 2.0 * (q - closest);
    const int f = pred_draws.face_idx[i];
    for (int k = 0; k < 3; ++k)
      out.d_vertices.row(pred.faces(f, k)) += weights(i, k) * d_sample.transpose();
  }

  out.value = target_to_pred + pred_to_target;
  if (breakdown) *breakdown = {target_to_pred, pred_to_target};
  return out;
}

GradientBundle loss_pts_seeded(const Mesh& pred, const Mesh& target, int n_pred, int n_target,
                               seed_t pred_seed, seed_t target_seed, double* tie_margin,
                               PtsBreakdown* breakdown) {
  const SampledPointSet pred_draws = sample_surface(pred, n_pred, pred_seed);
  const SampledPointSet target_points = sample_surface(target, n_target, target_seed);
  return loss_pts_sampled(pred, pred_draws, target, target_points.positions, tie_margin,
                          breakdown);
}

GradientBundle loss_pts(const Mesh& pred, const Mesh& target, int n, seed_t seed,
                        double* tie_margin, PtsBreakdown* breakdown) {
  return loss_pts_seeded(pred, target, n, n, derive_seed(seed, kPtsPredTag),
                         derive_seed(seed, kPtsTargetTag), tie_margin, breakdown);
}

GradientBundle loss_edge(const Mesh& pred) {
  GradientBundle out;
  out.value = 0.0;
  out.d_vertices = MatX3::Zero(pred.num_vertices(), 3);
  const EdgeMat edge_set = edges(pred);
  for (int e = 0; e < edge_set.rows(); ++e) {
    const int i = edge_set(e, 0), j = edge_set(e, 1);
    const Vec3 diff = pred.vertices.row(i) - pred.vertices.row(j);
    out.value += diff.squaredNorm();
    out.d_vertices.row(i) += 2.0 * diff.transpose();
    out.d_vertices.row(j) -= 2.0 * diff.transpose();
  }
  return out;
}

GradientBundle loss_laplacian(const Mesh& before, const Mesh& after) {
  if (before.num_vertices() != after.num_vertices() ||
      before.num_faces() != after.num_faces() ||
      !(before.faces.array() == after.faces.array()).all())
    throw ShapeError("meshes must share vertex count and face list");
  const SparseMat L = laplacian_operator(after);
  // Applying L to the displacement keeps the no-movement case exactly zero.
  const MatX3 diff = L * (after.vertices - before.vertices);
  GradientBundle out;
  out.value = diff.squaredNorm();
  out.d_vertices = 2.0 * (L.transpose() * diff);
  return out;
}

GradientBundle total_loss(const Mesh& pred, const Mesh& target, const Mesh& before,
                          const LossWeights& weights, int n, seed_t seed, SurfaceMode mode,
                          const EncoderParams* encoder, TotalLossBreakdown* breakdown,
                          double* tie_margin) {
  if (weights.gamma1 < 0 || weights.gamma2 < 0 || weights.gamma3 < 0 || weights.gamma4 < 0)
    throw ConfigError("loss weights must be nonnegative");

  GradientBundle out;
  out.value = 0.0;
  out.d_vertices = MatX3::Zero(pred.num_vertices(), 3);
  TotalLossBreakdown terms;

  if (weights.gamma1 > 0) {
    if (!encoder) throw ConfigError("latent weight > 0 requires an encoder");
    const GradientBundle latent = loss_latent(pred, target, *encoder, tie_margin);
    terms.latent = latent.value;
    out.value += weights.gamma1 * latent.value;
    out.d_vertices += weights.gamma1 * latent.d_vertices;
  }
  if (weights.gamma2 > 0) {
    const GradientBundle surface = (mode == SurfaceMode::ptp)
                                       ? loss_ptp(pred, target, n, seed, tie_margin)
                                       : loss_pts(pred, target, n, seed, tie_margin, nullptr);
    terms.surface = surface.value;
    out.value += weights.gamma2 * surface.value;
    out.d_vertices += weights.gamma2 * surface.d_vertices;
  }
  if (weights.gamma3 > 0) {
    const GradientBundle edge = loss_edge(pred);
    terms.edge = edge.value;
    out.value += weights.gamma3 * edge.value;
    out.d_vertices += weights.gamma3 * edge.d_vertices;
  }
  if (weights.gamma4 > 0) {
    const GradientBundle lap = loss_laplacian(before, pred);
    terms.laplacian = lap.value;
    out.value += weights.gamma4 * lap.value;
    out.d_vertices += weights.gamma4 * lap.d_vertices;
  }
  if (breakdown) *breakdown = terms;
  return out;
}

GradientCheck check_gradient(const std::function<GradientBundle(const Mesh&)>& loss,
                             const Mesh& mesh, double step) {
  const GradientBundle analytic = loss(mesh);
  MatX3 fd(mesh.num_vertices(), 3);
  Mesh probe = mesh;
  for (int i = 0; i < mesh.num_vertices(); ++i)
    for (int k = 0; k < 3; ++k) {
      const double saved = probe.vertices(i, k);
      probe.vertices(i, k) = saved + step;
      const double up = loss(probe).value;
      probe.vertices(i, k) = saved - step;
      const double down = loss(probe).value;
      probe.vertices(i, k) = saved;
      fd(i, k) = (up - down) / (2.0 * step);
    }
  const double denom = std::max(1e-12, fd.cwiseAbs().maxCoeff());
  const double num = (analytic.d_vertices - fd).cwiseAbs().maxCoeff();
  return {num / denom};
}

}  // namespace meshfit
