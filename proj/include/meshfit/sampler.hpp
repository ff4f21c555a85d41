#pragma once

#include <string>
#include <vector>

#include "meshfit/mesh.hpp"
#include "meshfit/rng.hpp"
#include "meshfit/types.hpp"

namespace meshfit {

// Area-proportional categorical distribution over faces, ready for
// inverse-CDF sampling. Zero-area faces get probability 0.
struct FaceDistribution {
  VecX areas;         // per-face area
  double total_area;  // > 0
  VecX cdf;           // cumulative probabilities; back() == 1
};

FaceDistribution face_distribution(const Mesh& mesh);

// Maps a uniform draw in [0, 1) to a face index by inverse CDF.
int sample_face(const FaceDistribution& dist, double u01);

// Surface samples with their generating draws retained so positions stay a
// deterministic function of vertex coordinates:
//   position = (1 - sqrt(u)) * v1 + sqrt(u) * (1 - w) * v2 + sqrt(u) * w * v3
struct SampledPointSet {
  std::vector<int> face_idx;
  VecX u, w;
  MatX3 positions;
  seed_t seed;

  int size() const { return static_cast<int>(face_idx.size()); }
};

// n area-uniform samples. Deterministic given (mesh, n, seed); each point's
// draws are keyed by its index, so the result is order-independent.
SampledPointSet sample_surface(const Mesh& mesh, int n, seed_t seed);

// Barycentric weight of each sample on its face's 3 vertices, row per point:
//   (1 - sqrt(u), sqrt(u) * (1 - w), sqrt(u) * w)
// The derivative of the position w.r.t. vertex k is weight_k * I. Throws
// ProvenanceError if the point set references a face the mesh lacks.
MatX3 sample_jacobian(const SampledPointSet& points, const Mesh& mesh);

// Recomputes positions from the stored (face, u, w) draws against the given
// vertex coordinates. Used when vertices move but the draws are frozen.
MatX3 sample_positions(const SampledPointSet& points, const Mesh& mesh);

void write_point_csv(const SampledPointSet& points, const std::string& path);
void write_point_xyz(const MatX3& positions, const std::string& path);

}  // namespace meshfit
