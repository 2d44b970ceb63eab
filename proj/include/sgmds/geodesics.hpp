#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sgmds/mesh.hpp"

namespace sgmds {

/// First-arrival geodesic distances from one source vertex.
struct DistanceField {
  int source = 0;
  Eigen::VectorXd dist;
};

/// Farthest-point sample indices plus the symmetrized geodesic distance
/// block among them.
struct SampledDistances {
  std::vector<int> indices;
  Eigen::MatrixXd d;  // m x m, symmetric, zero diagonal
  std::uint64_t mesh_hash = 0;
};

/// Shared per-mesh adjacency for repeated fast-marching runs. Immutable;
/// safe to use from several threads at once.
class FastMarcher {
 public:
  explicit FastMarcher(const TriMesh& mesh);

  /// Triangulated-domain fast marching from `source`. Obtuse angles are
  /// handled by unfolding across edges (bounded number of flips) with a
  /// two-point fallback. Throws NumericalError if any vertex stays
  /// unreachable.
  DistanceField run(int source) const;

  const TriMesh& mesh() const { return *mesh_; }

 private:
  struct UnfoldResult {
    int vertex = -1;
    double dist = 0.0;   // planar distance from the updated vertex
    double cos_a = 0.0;  // cos of sub-angle toward the first support
    double cos_b = 0.0;
  };

  int neighbor_across(int tri, int a, int b) const;
  int third_vertex(int tri, int a, int b) const;
  bool unfold_support(int tri, int v, int va, int vb, UnfoldResult* out) const;
  // Exact distances to the one- and two-ring of the source (edge lengths and
  // two-triangle unfoldings); replaces the poor planar-front linearization
  // of a point source in its immediate neighborhood.
  std::vector<std::pair<int, double>> near_field_seeds(int source) const;
  double triangle_contribution(int v, int tri, const std::vector<double>& dist,
                               const std::vector<char>& state) const;
  double update_vertex(int v, const std::vector<double>& dist,
                       const std::vector<char>& state) const;

  const TriMesh* mesh_;
  std::vector<std::vector<int>> vertex_tris_;  // one-ring triangles
  std::unordered_map<std::uint64_t, std::pair<int, int>> edge_tris_;
};

DistanceField fast_march(const TriMesh& mesh, int source);

/// Greedy farthest-point sampling seeded at vertex 0; ties break to the
/// lowest index. Exactly one of fraction/count forms below.
std::vector<int> farthest_point_sample(const TriMesh& mesh, double fraction);
std::vector<int> farthest_point_sample_count(const TriMesh& mesh, int count);

/// Pairwise geodesic distances among `indices`; each entry is the average of
/// the two directed fast-marching runs. Sources run in parallel across
/// `threads` with deterministic assembly.
SampledDistances distance_matrix(const TriMesh& mesh,
                                 const std::vector<int>& indices,
                                 int threads = 1);

}  // namespace sgmds
