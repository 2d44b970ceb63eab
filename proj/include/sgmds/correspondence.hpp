#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sgmds/laplacian.hpp"

namespace sgmds {

/// Dense vertex-to-vertex assignment from shape 1 to shape 2 with the
/// spectral-embedding residual of each match.
struct PointMap {
  std::vector<int> target_index;        // length n1, values in [0, n2)
  std::vector<double> match_distance;   // embedding distance of each match
};

/// f2 = Phi2 * alpha * (Phi1' * (A1 .* f1)); the dense n2 x n1 operator is
/// never formed.
Eigen::VectorXd transfer_function(const Eigen::MatrixXd& alpha,
                                  const EigenBasis& basis1,
                                  const EigenBasis& basis2,
                                  const Eigen::VectorXd& f1);

/// For every vertex i of shape 1, the exact nearest row of Phi2 to
/// row_i(Phi1) * alpha' in Euclidean embedding distance; ties break to the
/// lowest index. Exhaustive search (exact by construction), parallel over
/// row blocks. With area_weighted set, rows carry the per-vertex area factor
/// of the delta-function coefficients (experimental).
PointMap extract_point_map(const Eigen::MatrixXd& alpha,
                           const EigenBasis& basis1, const EigenBasis& basis2,
                           int threads = 1, bool area_weighted = false);

/// Text form: one line per shape-1 vertex, "i j match_distance".
void save_point_map(const PointMap& map, const std::string& path);
PointMap load_point_map(const std::string& path);

/// Debug-only materialization of the dense n2 x n1 map operator
/// K = Phi2 * alpha * Phi1' * A1. Refused above n1 * n2 = 4e6 entries.
Eigen::MatrixXd materialize_dense_map(const Eigen::MatrixXd& alpha,
                                      const EigenBasis& basis1,
                                      const EigenBasis& basis2);

}  // namespace sgmds
