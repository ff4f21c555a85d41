#include "meshfit/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace meshfit {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

Vec3 raw_face_normal(const Mesh& mesh, int face) {
  const Vec3 v1 = mesh.vertices.row(mesh.faces(face, 0));
  const Vec3 v2 = mesh.vertices.row(mesh.faces(face, 1));
  const Vec3 v3 = mesh.vertices.row(mesh.faces(face, 2));
  return (v1 - v2).cross(v3 - v2);
}

}  // namespace

void validate(const Mesh& mesh) {
  const int n = mesh.num_vertices();
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const int a = mesh.faces(f, 0), b = mesh.faces(f, 1), c = mesh.faces(f, 2);
    if (a < 0 || a >= n || b < 0 || b >= n || c < 0 || c >= n)
      throw ShapeError("face " + std::to_string(f) + " references vertex out of range");
    if (a == b || b == c || a == c)
      throw ShapeError("face " + std::to_string(f) + " repeats a vertex index");
  }
}

// ---------------------------------------------------------------------------
// OBJ I/O
// ---------------------------------------------------------------------------

namespace {

// Position index of one face token ("7", "7/1", "7//3", "7/1/3").
int parse_face_index(const std::string& token, int line) {
  const auto slash = token.find('/');
  const std::string_view head(token.data(), slash == std::string::npos ? token.size() : slash);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
  if (ec != std::errc{} || ptr != head.data() + head.size())
    throw ParseError("malformed face index '" + token + "'", line);
  if (value <= 0) throw ParseError("non-positive face index '" + token + "'", line);
  return value;
}

}  // namespace

Mesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");

  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::vector<int> face_lines;  // for index validation messages

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z()))
        throw ParseError("malformed vertex record", lineno);
      std::string extra;
      if (ss >> extra) throw ParseError("vertex record has extra fields", lineno);
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (tokens.size() != 3)
        throw UnsupportedFormatError("face with " + std::to_string(tokens.size()) +
                                     " vertices at line " + std::to_string(lineno) +
                                     "; only triangles are supported");
      std::array<int, 3> f;
      for (int k = 0; k < 3; ++k) f[k] = parse_face_index(tokens[k], lineno) - 1;
      faces.push_back(f);
      face_lines.push_back(lineno);
    }
    // Other record types (vn, vt, o, g, s, mtllib, ...) are ignored.
  }

  Mesh mesh;
  mesh.vertices.resize(static_cast<int>(verts.size()), 3);
  for (int i = 0; i < static_cast<int>(verts.size()); ++i) mesh.vertices.row(i) = verts[i];
  mesh.faces.resize(static_cast<int>(faces.size()), 3);
  for (int i = 0; i < static_cast<int>(faces.size()); ++i)
    for (int k = 0; k < 3; ++k) mesh.faces(i, k) = faces[i][k];

  for (int i = 0; i < mesh.num_faces(); ++i)
    for (int k = 0; k < 3; ++k)
      if (mesh.faces(i, k) >= mesh.num_vertices())
        throw ParseError("face index " + std::to_string(mesh.faces(i, k) + 1) +
                             " exceeds vertex count " + std::to_string(mesh.num_vertices()),
                         face_lines[i]);
  validate(mesh);
  return mesh;
}

void save_obj(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  char buf[128];
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", mesh.vertices(i, 0),
                  mesh.vertices(i, 1), mesh.vertices(i, 2));
    out << buf;
  }
  for (int f = 0; f < mesh.num_faces(); ++f)
    out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
        << mesh.faces(f, 2) + 1 << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

namespace {

Mesh from_lists(const std::vector<Vec3>& verts, const std::vector<std::array<int, 3>>& faces) {
  Mesh mesh;
  mesh.vertices.resize(static_cast<int>(verts.size()), 3);
  for (int i = 0; i < static_cast<int>(verts.size()); ++i) mesh.vertices.row(i) = verts[i];
  mesh.faces.resize(static_cast<int>(faces.size()), 3);
  for (int i = 0; i < static_cast<int>(faces.size()); ++i)
    for (int k = 0; k < 3; ++k) mesh.faces(i, k) = faces[i][k];
  validate(mesh);
  return mesh;
}

}  // namespace

Mesh make_ico_sphere(int subdiv) {
  if (subdiv < 0) throw ConfigError("ico sphere subdivision must be >= 0");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1},
  };
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };

  for (int level = 0; level < subdiv; ++level) {
    std::unordered_map<std::uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = edge_key(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(verts.size());
      verts.push_back(0.5 * (verts[a] + verts[b]));
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  for (auto& v : verts) v = 0.5 * v.normalized();
  return from_lists(verts, faces);
}

Mesh make_cube() {
  const std::vector<Vec3> verts = {
      {-0.5, -0.5, -0.5}, {0.5, -0.5, -0.5}, {0.5, 0.5, -0.5}, {-0.5, 0.5, -0.5},
      {-0.5, -0.5, 0.5},  {0.5, -0.5, 0.5},  {0.5, 0.5, 0.5},  {-0.5, 0.5, 0.5},
  };
  const std::vector<std::array<int, 3>> faces = {
      {0, 2, 1}, {0, 3, 2},  // bottom
      {4, 5, 6}, {4, 6, 7},  // top
      {0, 1, 5}, {0, 5, 4},  // front
      {2, 3, 7}, {2, 7, 6},  // back
      {0, 4, 7}, {0, 7, 3},  // left
      {1, 2, 6}, {1, 6, 5},  // right
  };
  return from_lists(verts, faces);
}

Mesh make_ellipsoid(double a, double b, double c, int subdiv) {
  if (a <= 0 || b <= 0 || c <= 0) throw ConfigError("ellipsoid semi-axes must be positive");
  Mesh mesh = make_ico_sphere(subdiv);
  mesh.vertices.col(0) *= 2.0 * a;  // base sphere has radius 0.5
  mesh.vertices.col(1) *= 2.0 * b;
  mesh.vertices.col(2) *= 2.0 * c;
  return mesh;
}

Mesh make_square2d() {
  const std::vector<Vec3> verts = {
      {-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0.5, 0.5, 0}, {-0.5, 0.5, 0}, {0, 0, 0}};
  const std::vector<std::array<int, 3>> faces = {{4, 0, 1}, {4, 1, 2}, {4, 2, 3}, {4, 3, 0}};
  return from_lists(verts, faces);
}

Mesh make_triangle2d() {
  const std::vector<Vec3> verts = {
      {-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0, 0.5, 0}, {0, -1.0 / 6.0, 0}};
  const std::vector<std::array<int, 3>> faces = {{3, 0, 1}, {3, 1, 2}, {3, 2, 0}};
  return from_lists(verts, faces);
}

Mesh make_torus(double major_radius, double minor_radius, int segments_major,
                int segments_minor) {
  if (major_radius <= minor_radius || minor_radius <= 0)
    throw ConfigError("torus requires major > minor > 0");
  if (segments_major < 3 || segments_minor < 3)
    throw ConfigError("torus requires >= 3 segments per ring");
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Vec3> verts;
  verts.reserve(static_cast<std::size_t>(segments_major) * segments_minor);
  for (int i = 0; i < segments_major; ++i) {
    const double theta = two_pi * i / segments_major;
    for (int j = 0; j < segments_minor; ++j) {
      const double phi = two_pi * j / segments_minor;
      const double ring = major_radius + minor_radius * std::cos(phi);
      verts.push_back({ring * std::cos(theta), ring * std::sin(theta),
                       minor_radius * std::sin(phi)});
    }
  }
  std::vector<std::array<int, 3>> faces;
  faces.reserve(static_cast<std::size_t>(segments_major) * segments_minor * 2);
  auto at = [&](int i, int j) {
    return (i % segments_major) * segments_minor + (j % segments_minor);
  };
  for (int i = 0; i < segments_major; ++i)
    for (int j = 0; j < segments_minor; ++j) {
      const int v00 = at(i, j), v10 = at(i + 1, j), v11 = at(i + 1, j + 1), v01 = at(i, j + 1);
      faces.push_back({v00, v10, v11});
      faces.push_back({v00, v11, v01});
    }
  return from_lists(verts, faces);
}

// ---------------------------------------------------------------------------
// Per-face geometry
// ---------------------------------------------------------------------------

Vec3 face_normal(const Mesh& mesh, int face) {
  const Vec3 n = raw_face_normal(mesh, face);
  const double len = n.norm();
  if (len < kAreaEps) throw DegenerateFaceError("degenerate face", face);
  return n / len;
}

double face_area(const Mesh& mesh, int face) { return 0.5 * raw_face_normal(mesh, face).norm(); }

double face_curvature(const Mesh& mesh, int face) {
  const auto neighbors = face_neighbors(mesh);
  if (neighbors[face].empty()) throw NoNeighborError("face " + std::to_string(face) + " has no edge-neighbor");
  const Vec3 own = face_normal(mesh, face);
  double sum = 0.0;
  for (int g : neighbors[face])
    sum += std::acos(std::clamp(own.dot(face_normal(mesh, g)), -1.0, 1.0));
  return kRadToDeg * sum / static_cast<double>(neighbors[face].size());
}

VecX face_curvatures(const Mesh& mesh) {
  const auto neighbors = face_neighbors(mesh);
  MatX3 normals(mesh.num_faces(), 3);
  for (int f = 0; f < mesh.num_faces(); ++f) normals.row(f) = face_normal(mesh, f);
  VecX result(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (neighbors[f].empty())
      throw NoNeighborError("face " + std::to_string(f) + " has no edge-neighbor");
    double sum = 0.0;
    const Vec3 own = normals.row(f);
    for (int g : neighbors[f])
      sum += std::acos(std::clamp(own.dot(normals.row(g).transpose().eval()), -1.0, 1.0));
    result[f] = kRadToDeg * sum / static_cast<double>(neighbors[f].size());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Graph operators
// ---------------------------------------------------------------------------

EdgeMat edges(const Mesh& mesh) {
  std::vector<std::uint64_t> keys;
  keys.reserve(static_cast<std::size_t>(mesh.num_faces()) * 3);
  for (int f = 0; f < mesh.num_faces(); ++f)
    for (int k = 0; k < 3; ++k)
      keys.push_back(edge_key(mesh.faces(f, k), mesh.faces(f, (k + 1) % 3)));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  EdgeMat result(static_cast<int>(keys.size()), 2);
  for (int i = 0; i < result.rows(); ++i) {
    result(i, 0) = static_cast<int>(keys[i] >> 32);
    result(i, 1) = static_cast<int>(keys[i] & 0xFFFFFFFFull);
  }
  return result;
}

std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh) {
  std::vector<std::vector<int>> result(mesh.num_vertices());
  const EdgeMat e = edges(mesh);
  for (int i = 0; i < e.rows(); ++i) {
    result[e(i, 0)].push_back(e(i, 1));
    result[e(i, 1)].push_back(e(i, 0));
  }
  return result;
}

std::vector<std::vector<int>> face_neighbors(const Mesh& mesh) {
  std::unordered_map<std::uint64_t, std::vector<int>> by_edge;
  by_edge.reserve(static_cast<std::size_t>(mesh.num_faces()) * 2);
  for (int f = 0; f < mesh.num_faces(); ++f)
    for (int k = 0; k < 3; ++k)
      by_edge[edge_key(mesh.faces(f, k), mesh.faces(f, (k + 1) % 3))].push_back(f);
  std::vector<std::vector<int>> result(mesh.num_faces());
  for (const auto& [key, shared] : by_edge)
    for (int a : shared)
      for (int b : shared)
        if (a != b) result[a].push_back(b);
  for (auto& list : result) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return result;
}

AdjacencyOp adjacency(const Mesh& mesh, AdjacencyMode mode) {
  const int n = mesh.num_vertices();
  const EdgeMat e = edges(mesh);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(e.rows()) * 2 + n);
  for (int i = 0; i < e.rows(); ++i) {
    triplets.emplace_back(e(i, 0), e(i, 1), 1.0);
    triplets.emplace_back(e(i, 1), e(i, 0), 1.0);
  }
  if (mode != AdjacencyMode::raw)
    for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);

  SparseMat A(n, n);
  A.setFromTriplets(triplets.begin(), triplets.end());

  if (mode != AdjacencyMode::raw) {
    VecX degree = A * VecX::Ones(n);
    if (mode == AdjacencyMode::self_loop_row_normalized) {
      for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMat::InnerIterator it(A, k); it; ++it)
          it.valueRef() /= degree[it.row()];
    } else {
      const VecX inv_sqrt = degree.array().sqrt().inverse();
      for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMat::InnerIterator it(A, k); it; ++it)
          it.valueRef() *= inv_sqrt[it.row()] * inv_sqrt[it.col()];
    }
  }
  return AdjacencyOp{mode, std::move(A)};
}

SparseMat laplacian_operator(const Mesh& mesh) {
  const auto neighbors = vertex_neighbors(mesh);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    if (neighbors[i].empty())
      throw NoNeighborError("vertex " + std::to_string(i) + " has no neighbor");
    triplets.emplace_back(i, i, 1.0);
    const double w = -1.0 / static_cast<double>(neighbors[i].size());
    for (int j : neighbors[i]) triplets.emplace_back(i, j, w);
  }
  SparseMat L(mesh.num_vertices(), mesh.num_vertices());
  L.setFromTriplets(triplets.begin(), triplets.end());
  return L;
}

MatX3 laplacian_coordinates(const Mesh& mesh) {
  return laplacian_operator(mesh) * mesh.vertices;
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

Mesh translated(const Mesh& mesh, const Vec3& offset) {
  Mesh result = mesh;
  result.vertices.rowwise() += offset.transpose();
  return result;
}

Mesh scaled(const Mesh& mesh, const Vec3& factors) {
  Mesh result = mesh;
  for (int k = 0; k < 3; ++k) result.vertices.col(k) *= factors[k];
  return result;
}

Mesh normalized_to_unit_cube(const Mesh& mesh) {
  if (mesh.num_vertices() == 0) throw EmptyInputError("cannot normalize an empty mesh");
  const Vec3 lo = mesh.vertices.colwise().minCoeff();
  const Vec3 hi = mesh.vertices.colwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (extent <= 0) throw ZeroAreaError("mesh has zero extent");
  Mesh result = mesh;
  result.vertices.rowwise() -= (0.5 * (lo + hi)).transpose();
  result.vertices /= extent;
  return result;
}

}  // namespace meshfit
