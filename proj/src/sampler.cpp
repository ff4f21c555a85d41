#include "meshfit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "meshfit/errors.hpp"

namespace meshfit {

FaceDistribution face_distribution(const Mesh& mesh) {
  const int nf = mesh.num_faces();
  if (nf == 0) throw ZeroAreaError("mesh has no faces");
  FaceDistribution dist;
  dist.areas.resize(nf);
  for (int f = 0; f < nf; ++f) {
    const double area = face_area(mesh, f);
    dist.areas[f] = (area < kAreaEps) ? 0.0 : area;
  }
  dist.total_area = dist.areas.sum();
  if (dist.total_area <= 0.0) throw ZeroAreaError("mesh has zero total area");
  dist.cdf.resize(nf);
  double acc = 0.0;
  for (int f = 0; f < nf; ++f) {
    acc += dist.areas[f] / dist.total_area;
    dist.cdf[f] = acc;
  }
  dist.cdf[nf - 1] = 1.0;  // absorb rounding so the last face is always reachable
  return dist;
}

int sample_face(const FaceDistribution& dist, double u01) {
  const int nf = static_cast<int>(dist.cdf.size());
  const double* begin = dist.cdf.data();
  int idx = static_cast<int>(std::upper_bound(begin, begin + nf, u01) - begin);
  if (idx >= nf) idx = nf - 1;
  // CDF plateaus make zero-probability faces unreachable except through
  // rounding at the forced final 1.0; step off them deterministically.
  while (idx > 0 && dist.areas[idx] == 0.0) --idx;
  while (idx < nf - 1 && dist.areas[idx] == 0.0) ++idx;
  return idx;
}

SampledPointSet sample_surface(const Mesh& mesh, int n, seed_t seed) {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  const FaceDistribution dist = face_distribution(mesh);
  const CounterRng rng(seed);

  SampledPointSet set;
  set.seed = seed;
  set.face_idx.resize(n);
  set.u.resize(n);
  set.w.resize(n);
  set.positions.resize(n, 3);

  for (int i = 0; i < n; ++i) {
    const std::uint64_t base = 3ull * static_cast<std::uint64_t>(i);
    const int f = sample_face(dist, rng.uniform(base));
    const double u = rng.uniform(base + 1);
    const double w = rng.uniform(base + 2);
    set.face_idx[i] = f;
    set.u[i] = u;
    set.w[i] = w;
    const double su = std::sqrt(u);
    const Vec3 v1 = mesh.vertices.row(mesh.faces(f, 0));
    const Vec3 v2 = mesh.vertices.row(mesh.faces(f, 1));
    const Vec3 v3 = mesh.vertices.row(mesh.faces(f, 2));
    set.positions.row(i) = (1.0 - su) * v1 + su * (1.0 - w) * v2 + su * w * v3;
  }
  return set;
}

MatX3 sample_jacobian(const SampledPointSet& points, const Mesh& mesh) {
  MatX3 weights(points.size(), 3);
  for (int i = 0; i < points.size(); ++i) {
    const int f = points.face_idx[i];
    if (f < 0 || f >= mesh.num_faces())
      throw ProvenanceError("point set references face " + std::to_string(f) +
                            " absent from this mesh");
    const double su = std::sqrt(points.u[i]);
    weights(i, 0) = 1.0 - su;
    weights(i, 1) = su * (1.0 - points.w[i]);
    weights(i, 2) = su * points.w[i];
  }
  return weights;
}

MatX3 sample_positions(const SampledPointSet& points, const Mesh& mesh) {
  const MatX3 weights = sample_jacobian(points, mesh);
  MatX3 positions(points.size(), 3);
  for (int i = 0; i < points.size(); ++i) {
    const int f = points.face_idx[i];
    positions.row(i) = weights(i, 0) * mesh.vertices.row(mesh.faces(f, 0)) +
                       weights(i, 1) * mesh.vertices.row(mesh.faces(f, 1)) +
                       weights(i, 2) * mesh.vertices.row(mesh.faces(f, 2));
  }
  return positions;
}

void write_point_csv(const SampledPointSet& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "x,y,z,face_idx,u,w\n";
  char buf[256];
  for (int i = 0; i < points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d,%.17g,%.17g\n",
                  points.positions(i, 0), points.positions(i, 1), points.positions(i, 2),
                  points.face_idx[i], points.u[i], points.w[i]);
    out << buf;
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_point_xyz(const MatX3& positions, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  char buf[160];
  for (int i = 0; i < positions.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", positions(i, 0), positions(i, 1),
                  positions(i, 2));
    out << buf;
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace meshfit
