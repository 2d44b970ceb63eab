#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sgmds {

/// A validated triangulated surface. Immutable after construction; safe to
/// share across threads.
struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise

  int n() const { return static_cast<int>(vertices.size()); }
  int m() const { return static_cast<int>(triangles.size()); }

  double bounding_box_diagonal() const;
  double surface_area() const;
  double triangle_area(int t) const;
};

/// Per-vertex lumped mass (area) weights. a[i] > 0 and sum(a) equals the
/// surface area.
struct MassDiagonal {
  Eigen::VectorXd a;
  double total_area = 0.0;
};

enum class AreaScheme {
  kMixedVoronoi,  // Voronoi region, obtuse triangles split 1/2 : 1/4 : 1/4
  kBarycentric,   // one third of each incident triangle
};

/// Checks index ranges, degenerate triangles, edge-manifoldness and
/// connectivity. Throws ValidationError listing every violation found.
void validate_mesh(const TriMesh& mesh);

/// Mixed-Voronoi (default) or barycentric per-vertex areas.
MassDiagonal vertex_areas(const TriMesh& mesh,
                          AreaScheme scheme = AreaScheme::kMixedVoronoi);

/// Undirected edges as (lo, hi) pairs, sorted, unique.
std::vector<std::array<int, 2>> mesh_edges(const TriMesh& mesh);

/// Sorted multiset of edge lengths; used by isometry checks.
std::vector<double> edge_length_multiset(const TriMesh& mesh);

/// FNV-1a content hash over vertex and triangle data; identifies a mesh for
/// cache validation.
std::uint64_t mesh_content_hash(const TriMesh& mesh);

// ---- I/O (mesh_io.cpp). Formats: OFF and OBJ in, OFF out; ASCII,
// locale-independent decimal points. --------------------------------------

/// Loads and validates a mesh. Throws ParseError / ValidationError / IoError.
/// Unsupported OBJ records are skipped; a note for each distinct record type
/// is appended to *warnings if given.
TriMesh load_mesh(const std::string& path,
                  std::vector<std::string>* warnings = nullptr);

/// Writes OFF with full double precision (round-trips bit-exactly).
void save_mesh_off(const TriMesh& mesh, const std::string& path);

}  // namespace sgmds
