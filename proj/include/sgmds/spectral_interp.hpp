#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "sgmds/geodesics.hpp"
#include "sgmds/laplacian.hpp"

namespace sgmds {

/// Spectral coefficients alpha of a smooth symmetric kernel approximating
/// the sampled distances: reconstructed(i, j) = phi_i' * alpha * phi_j.
struct SpectralDistance {
  Eigen::MatrixXd alpha;  // M x M, symmetric
  double mu = 0.0;
  double fit_rms = 0.0;  // RMS misfit over the sampled pairs
  std::uint64_t basis_hash = 0;
};

/// Quadratic objective behind interpolate_distances:
///   tr(alpha' L alpha) + tr(alpha L alpha') + mu * sum of squared misfits
/// at the sampled pairs. Exposed for the optimality property tests.
double interp_objective(const Eigen::MatrixXd& alpha, const EigenBasis& basis,
                        const SampledDistances& samples, double mu);

/// mu heuristic when the caller does not pin one: 1e3 * (M/m)^2 divided by
/// the mean squared sampled distance, making the data term scale-free.
double default_interp_mu(const EigenBasis& basis,
                         const SampledDistances& samples);

/// Solves the Dirichlet-regularized fitting problem exactly (the objective
/// is a strictly convex quadratic for mu > 0); matrix-free conjugate
/// gradients on the symmetric normal operator, relative residual 1e-10.
SpectralDistance interpolate_distances(const EigenBasis& basis,
                                       const SampledDistances& samples,
                                       double mu);

/// phi_i' * alpha * phi_j; exactly symmetric in (i, j).
double reconstruct_distance(const SpectralDistance& sd, const EigenBasis& basis,
                            int i, int j);

}  // namespace sgmds
