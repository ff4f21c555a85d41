#include "meshfit/refine.hpp"

#include <cstdio>
#include <fstream>

#include "meshfit/errors.hpp"

namespace meshfit {

namespace {

std::pair<Mesh, SplitReport> apply_splits(const Mesh& mesh, const std::vector<bool>& split,
                                          VecX curvatures) {
  SplitReport report;
  report.vertices_before = mesh.num_vertices();
  report.faces_before = mesh.num_faces();
  report.curvatures = std::move(curvatures);
  for (int f = 0; f < mesh.num_faces(); ++f)
    if (split[f]) report.split_face_indices.push_back(f);

  const int n_split = static_cast<int>(report.split_face_indices.size());
  Mesh out;
  out.vertices.resize(mesh.num_vertices() + n_split, 3);
  out.vertices.topRows(mesh.num_vertices()) = mesh.vertices;
  out.faces.resize(mesh.num_faces() + 2 * n_split, 3);

  int next_vertex = mesh.num_vertices();
  int next_face = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const int a = mesh.faces(f, 0), b = mesh.faces(f, 1), c = mesh.faces(f, 2);
    if (!split[f]) {
      out.faces.row(next_face++) << a, b, c;
      continue;
    }
    const int m = next_vertex++;
    out.vertices.row(m) =
        (mesh.vertices.row(a) + mesh.vertices.row(b) + mesh.vertices.row(c)) / 3.0;
    out.faces.row(next_face++) << a, b, m;
    out.faces.row(next_face++) << b, c, m;
    out.faces.row(next_face++) << c, a, m;
  }

  report.vertices_after = out.num_vertices();
  report.faces_after = out.num_faces();
  return {std::move(out), std::move(report)};
}

}  // namespace

std::pair<Mesh, SplitReport> split_adaptive(const Mesh& mesh, const SplitConfig& config) {
  if (config.alpha_degrees <= 0.0 || config.alpha_degrees >= 180.0)
    throw ConfigError("split threshold must lie in (0, 180) degrees");
  // Snapshot all curvatures on the input mesh before touching any face.
  const VecX curvatures = face_curvatures(mesh);
  std::vector<bool> split(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) split[f] = curvatures[f] > config.alpha_degrees;
  return apply_splits(mesh, split, curvatures);
}

std::pair<Mesh, SplitReport> split_uniform(const Mesh& mesh) {
  return apply_splits(mesh, std::vector<bool>(mesh.num_faces(), true), VecX());
}

void write_split_report_csv(const SplitReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "face_idx,curvature,split\n";
  std::vector<bool> split(static_cast<std::size_t>(report.faces_before), false);
  for (int f : report.split_face_indices) split[static_cast<std::size_t>(f)] = true;
  char buf[96];
  for (int f = 0; f < report.faces_before; ++f) {
    const double curv = report.curvatures.size() > 0 ? report.curvatures[f] : 0.0;
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%d\n", f, curv, split[f] ? 1 : 0);
    out << buf;
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace meshfit
