#pragma once

#include "meshfit/mesh.hpp"
#include "meshfit/types.hpp"

namespace meshfit {

struct MetricConfig {
  double tau = 1e-4;            // squared-distance match threshold
  int n_eval = 10000;           // samples per surface
  int raster_resolution = 512;  // 2D IoU grid size per axis
};

// Percentage F1 of point-set overlap: a point matches when its nearest
// neighbor in the other set lies within squared distance tau. Returns 0 when
// precision + recall is 0.
double f1_score(const MatX3& pred_points, const MatX3& target_points, double tau);

// Rasterized IoU of two filled triangle fans lying in the z = 0 plane, on a
// shared grid over the joint bounding box. Throws PlanarityError when either
// mesh leaves the plane by more than 1e-9.
double polygon_iou_2d(const Mesh& mesh_a, const Mesh& mesh_b, int raster_resolution = 512);

}  // namespace meshfit
