#include "sgmds/mesh.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <sstream>

#include "sgmds/errors.hpp"

namespace sgmds {

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Eigen::Vector3d e1 = vertices[tri[1]] - vertices[tri[0]];
  const Eigen::Vector3d e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

double TriMesh::surface_area() const {
  double total = 0.0;
  for (int t = 0; t < m(); ++t) total += triangle_area(t);
  return total;
}

double TriMesh::bounding_box_diagonal() const {
  if (vertices.empty()) return 0.0;
  Eigen::Vector3d lo = vertices.front();
  Eigen::Vector3d hi = vertices.front();
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

namespace {

std::string join_indices(const std::vector<long>& idx) {
  std::ostringstream os;
  const std::size_t cap = 20;
  for (std::size_t i = 0; i < idx.size() && i < cap; ++i) {
    if (i) os << ", ";
    os << idx[i];
  }
  if (idx.size() > cap) os << ", ... (" << idx.size() - cap << " more)";
  return os.str();
}

}  // namespace

void validate_mesh(const TriMesh& mesh) {
  std::vector<ValidationIssue> issues;
  const int n = mesh.n();

  if (n < 3 || mesh.m() < 1)
    issues.push_back({"empty_mesh", {}, "need at least 3 vertices and 1 triangle"});

  // Index range and repeated-vertex triangles.
  std::vector<long> bad_index, repeated;
  for (int t = 0; t < mesh.m(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    bool in_range = true;
    for (int k = 0; k < 3; ++k)
      if (tri[k] < 0 || tri[k] >= n) in_range = false;
    if (!in_range) {
      bad_index.push_back(t);
      continue;
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      repeated.push_back(t);
  }
  if (!bad_index.empty())
    issues.push_back({"index_out_of_range", bad_index,
                      "triangles " + join_indices(bad_index)});
  if (!repeated.empty())
    issues.push_back({"repeated_vertex_triangle", repeated,
                      "triangles " + join_indices(repeated)});
  if (!bad_index.empty() || n == 0) {
    throw ValidationError("mesh validation failed: indices out of range",
                          std::move(issues));
  }

  // Degenerate (zero-area) triangles, tolerance relative to bbox diagonal^2.
  const double diag = mesh.bounding_box_diagonal();
  const double area_tol = 1e-12 * diag * diag;
  std::vector<long> degenerate;
  for (int t = 0; t < mesh.m(); ++t)
    if (mesh.triangle_area(t) <= area_tol) degenerate.push_back(t);
  if (!degenerate.empty())
    issues.push_back({"degenerate_triangle", degenerate,
                      "zero area under tolerance; triangles " +
                          join_indices(degenerate)});

  // Edge-manifold: each undirected edge borders at most two triangles.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  std::vector<long> nonmanifold;
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) {
      nonmanifold.push_back(edge.first);
      nonmanifold.push_back(edge.second);
    }
  }
  if (!nonmanifold.empty())
    issues.push_back({"nonmanifold_edge", nonmanifold,
                      "edge endpoints " + join_indices(nonmanifold)});

  // Single connected component (via triangle edges).
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [edge, count] : edge_count) {
    adj[static_cast<std::size_t>(edge.first)].push_back(edge.second);
    adj[static_cast<std::size_t>(edge.second)].push_back(edge.first);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        stack.push_back(w);
      }
  }
  std::vector<long> unreachable;
  for (int v = 0; v < n; ++v)
    if (!seen[static_cast<std::size_t>(v)]) unreachable.push_back(v);
  if (!unreachable.empty())
    issues.push_back({"disconnected", unreachable,
                      "vertices not reachable from vertex 0: " +
                          join_indices(unreachable)});

  if (!issues.empty()) {
    std::ostringstream msg;
    msg << "mesh validation failed:";
    for (const auto& issue : issues) msg << "\n  " << issue.kind << ": " << issue.detail;
    throw ValidationError(msg.str(), std::move(issues));
  }
}

MassDiagonal vertex_areas(const TriMesh& mesh, AreaScheme scheme) {
  MassDiagonal mass;
  mass.a = Eigen::VectorXd::Zero(mesh.n());

  for (int t = 0; t < mesh.m(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Eigen::Vector3d& p0 = mesh.vertices[tri[0]];
    const Eigen::Vector3d& p1 = mesh.vertices[tri[1]];
    const Eigen::Vector3d& p2 = mesh.vertices[tri[2]];
    const double area = mesh.triangle_area(t);

    if (scheme == AreaScheme::kBarycentric) {
      for (int k = 0; k < 3; ++k) mass.a[tri[k]] += area / 3.0;
      continue;
    }

    // cos of the interior angle at each corner
    const Eigen::Vector3d e01 = p1 - p0, e02 = p2 - p0, e12 = p2 - p1;
    const double c0 = e01.normalized().dot(e02.normalized());
    const double c1 = (-e01).normalized().dot(e12.normalized());
    const double c2 = (-e02).normalized().dot(-e12.normalized());

    if (c0 < 0.0 || c1 < 0.0 || c2 < 0.0) {
      // Obtuse: half to the obtuse corner, quarter to the others.
      const int obtuse = c0 < 0.0 ? 0 : (c1 < 0.0 ? 1 : 2);
      for (int k = 0; k < 3; ++k)
        mass.a[tri[k]] += (k == obtuse) ? area / 2.0 : area / 4.0;
    } else {
      // Voronoi region: |e|^2 * cot(opposite angle) / 8 for the two edges
      // incident to the corner.
      const double inv2a = 1.0 / (2.0 * area);
      const double cot0 = e01.dot(e02) * inv2a;     // angle at p0
      const double cot1 = (-e01).dot(e12) * inv2a;  // at p1
      const double cot2 = e02.dot(e12) * inv2a;     // at p2
      const double l01 = e01.squaredNorm(), l02 = e02.squaredNorm(),
                   l12 = e12.squaredNorm();
      mass.a[tri[0]] += (l01 * cot2 + l02 * cot1) / 8.0;
      mass.a[tri[1]] += (l01 * cot2 + l12 * cot0) / 8.0;
      mass.a[tri[2]] += (l02 * cot1 + l12 * cot0) / 8.0;
    }
  }

  mass.total_area = mass.a.sum();
  for (int i = 0; i < mesh.n(); ++i) {
    if (!(mass.a[i] > 0.0))
      throw NumericalError("vertex_areas: non-positive area at vertex " +
                           std::to_string(i));
  }
  return mass;
}

std::vector<std::array<int, 2>> mesh_edges(const TriMesh& mesh) {
  std::vector<std::array<int, 2>> edges;
  edges.reserve(static_cast<std::size_t>(mesh.m()) * 3);
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.push_back({a, b});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<double> edge_length_multiset(const TriMesh& mesh) {
  std::vector<double> lengths;
  for (const auto& e : mesh_edges(mesh))
    lengths.push_back((mesh.vertices[e[0]] - mesh.vertices[e[1]]).norm());
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

std::uint64_t mesh_content_hash(const TriMesh& mesh) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& v : mesh.vertices) {
    double coords[3] = {v.x(), v.y(), v.z()};
    mix(coords, sizeof(coords));
  }
  for (const auto& t : mesh.triangles) mix(t.data(), sizeof(int) * 3);
  return h;
}

}  // namespace sgmds
