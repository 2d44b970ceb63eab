#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sgmds/mesh.hpp"

namespace sgmds {

/// Cotangent stiffness matrix: symmetric, rows sum to zero, f'Wf >= 0.
struct StiffnessMatrix {
  Eigen::SparseMatrix<double> w;
};

/// Truncated Laplace-Beltrami eigenbasis of the pencil W phi = lambda A phi.
/// Columns of phi are A-orthonormal and ordered by ascending eigenvalue with
/// a deterministic sign convention (largest-magnitude entry positive, ties
/// to the lowest vertex index). Immutable after construction.
struct EigenBasis {
  Eigen::MatrixXd phi;     // n x M
  Eigen::VectorXd lambda;  // M, ascending, >= 0
  MassDiagonal mass;
  int M = 0;
};

/// Assembles W. Throws NumericalError naming the triangle if a near-degenerate
/// triangle produces a cotangent of magnitude > 1e8.
StiffnessMatrix cotan_weights(const TriMesh& mesh);

struct EigenOptions {
  double residual_tol = 1e-9;  // per-column, relative to an estimate of |W|
  int max_iterations = 0;      // 0 = default cap 10 * M * sqrt(n)
};

/// Computes the M smallest-eigenvalue pairs of W phi = lambda A phi by
/// shift-inverted Lanczos with full reorthogonalization on the symmetrized
/// operator A^{-1/2} W A^{-1/2}. Exactly degenerate eigenvalue clusters are
/// rotated to a deterministic in-cluster basis so repeated runs -- and runs
/// on relabeled copies of the same surface -- produce comparable columns.
/// Throws NumericalError (carrying the achieved residual) on non-convergence.
EigenBasis eigenbasis(const StiffnessMatrix& w, const MassDiagonal& a, int M,
                      const EigenOptions& opts = {});

/// Convenience: cotan_weights + vertex_areas + eigenbasis.
EigenBasis eigenbasis_of_mesh(const TriMesh& mesh, int M,
                              AreaScheme scheme = AreaScheme::kMixedVoronoi,
                              const EigenOptions& opts = {});

}  // namespace sgmds
