#pragma once

#include <string>
#include <utility>
#include <vector>

#include "meshfit/mesh.hpp"
#include "meshfit/types.hpp"

namespace meshfit {

struct SplitConfig {
  double alpha_degrees = 70.0;  // must lie in (0, 180)
};

struct SplitReport {
  std::vector<int> split_face_indices;  // indices into the input mesh
  int vertices_before = 0;
  int vertices_after = 0;
  int faces_before = 0;
  int faces_after = 0;
  VecX curvatures;  // per input face at decision time; empty for uniform splits
};

// Replaces every face whose curvature exceeds alpha by 3 faces sharing a new
// vertex at the face centroid. Curvatures are snapshotted on the input mesh
// before any split, so the result is independent of face order. Non-split
// faces keep their relative order; new vertices are appended in split order.
std::pair<Mesh, SplitReport> split_adaptive(const Mesh& mesh, const SplitConfig& config);

// Centroid-splits every face unconditionally: V' = V + F, F' = 3F.
std::pair<Mesh, SplitReport> split_uniform(const Mesh& mesh);

// CSV columns: face_idx, curvature, split (0/1).
void write_split_report_csv(const SplitReport& report, const std::string& path);

}  // namespace meshfit
