#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "sgmds/laplacian.hpp"
#include "sgmds/spectral_interp.hpp"

namespace sgmds {

/// Inputs of the spectral matching problem between two shapes: per-shape
/// spectral distance coefficients, eigenvalues, the spectral coefficients of
/// the constant function (c_i = Phi_i' A_i 1), and the penalty weights for
/// conformality (mu1) and unitarity (mu2).
struct SgmdsProblem {
  Eigen::MatrixXd alpha1;  // M1 x M1, symmetric
  Eigen::MatrixXd alpha2;  // M2 x M2, symmetric
  Eigen::VectorXd lambda1;  // M1
  Eigen::VectorXd lambda2;  // M2
  Eigen::VectorXd c1;  // M1
  Eigen::VectorXd c2;  // M2
  double mu1 = 0.0;
  double mu2 = 1.0;

  int m1() const { return static_cast<int>(lambda1.size()); }
  int m2() const { return static_cast<int>(lambda2.size()); }
};

struct SolverConfig {
  double mu1 = -1.0;  // < 0: use the problem's weights
  double mu2 = -1.0;
  double penalty_start = 1e2;
  double penalty_growth = 10.0;
  int outer_iters = 8;
  int inner_iters = 500;
  double inner_tol = 1e-6;       // gradient norm <= tol * (1 + objective)
  double constraint_tol = 1e-6;  // relative to |c2| resp. |c1|
};

/// Solved functional-map coefficients with solver diagnostics.
struct FunctionalMapCoeffs {
  Eigen::MatrixXd alpha;  // M2 x M1
  std::vector<double> objective_history;  // per accepted outer iteration
  // Augmented objective at every accepted inner step, grouped by outer
  // iteration; non-increasing within each group by the line-search contract.
  std::vector<std::vector<double>> augmented_history;
  double constraint_residual = 0.0;  // max(|a c1 - c2|, |a' c2 - c1|)
  double mass_residual_1 = 0.0;      // |alpha c1 - c2|
  double mass_residual_2 = 0.0;      // |alpha' c2 - c1|
  double mass_residual_rel_1 = 0.0;  // |alpha c1 - c2| / |c2|
  double mass_residual_rel_2 = 0.0;  // |alpha' c2 - c1| / |c1|
  double unitarity_residual = 0.0;   // |alpha' alpha - I|_F
  double conformality_residual = 0.0;
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
};

/// Builds the problem from two per-shape pipelines. Default weights:
/// mu1 = 1 / |lambda1|_F^2 (normalizes the conformality term), mu2 = 1.
SgmdsProblem make_problem(const SpectralDistance& sd1, const EigenBasis& b1,
                          const SpectralDistance& sd2, const EigenBasis& b2,
                          double mu1 = -1.0, double mu2 = -1.0);

/// |a a1 - a2 a|_F^2 + mu1 |L1 - a' L2 a|_F^2 + mu2 |a' a - I|_F^2
double objective(const Eigen::MatrixXd& alpha, const SgmdsProblem& p);

/// Exact analytic gradient of objective(); validated against central finite
/// differences in the test suite.
Eigen::MatrixXd gradient(const Eigen::MatrixXd& alpha, const SgmdsProblem& p);

/// Action of the objective Hessian at alpha on a direction v (exact);
/// drives the Newton-CG inner solver.
Eigen::MatrixXd hessian_vec(const Eigen::MatrixXd& alpha,
                            const Eigen::MatrixXd& v, const SgmdsProblem& p);

/// Deterministic spectral alignment used as the solver start: per
/// eigenvalue-group orthogonal alignment of the two coefficient blocks
/// (plain +-1 signs when every group is a singleton), a global sign fixed by
/// the constant-function coefficients, then the least-change rank-one
/// correction so that alpha c1 = c2 holds exactly.
Eigen::MatrixXd init_alpha(const SgmdsProblem& p);

/// Augmented-Lagrangian outer loop (multiplier updates, penalty weight
/// ramped by penalty_growth per round) around a preconditioned Newton-CG
/// inner solver with Armijo backtracking. Throws NumericalError if the
/// objective turns NaN; non-convergence is reported through the returned
/// diagnostics instead.
FunctionalMapCoeffs solve(const SgmdsProblem& p, const SolverConfig& cfg = {},
                          const std::optional<Eigen::MatrixXd>& init = {});

}  // namespace sgmds
