#include "sgmds/spectral_interp.hpp"

#include <cmath>
#include <string>

#include "sgmds/cache.hpp"
#include "sgmds/errors.hpp"

namespace sgmds {

namespace {

// Rows of phi at the sampled vertices.
Eigen::MatrixXd sampled_rows(const EigenBasis& basis,
                             const SampledDistances& samples) {
  const int m = static_cast<int>(samples.indices.size());
  Eigen::MatrixXd p(m, basis.M);
  for (int i = 0; i < m; ++i) {
    const int idx = samples.indices[static_cast<std::size_t>(i)];
    if (idx < 0 || idx >= basis.phi.rows())
      throw ValidationError("interpolate_distances: sample index " +
                                std::to_string(idx) + " outside the basis mesh",
                            {});
    p.row(i) = basis.phi.row(idx);
  }
  return p;
}

}  // namespace

double interp_objective(const Eigen::MatrixXd& alpha, const EigenBasis& basis,
                        const SampledDistances& samples, double mu) {
  const Eigen::MatrixXd p = sampled_rows(basis, samples);
  const Eigen::VectorXd& lam = basis.lambda;
  const double smooth = (lam.asDiagonal() * alpha).cwiseProduct(alpha).sum() +
                        (alpha * lam.asDiagonal()).cwiseProduct(alpha).sum();
  const double fit = (p * alpha * p.transpose() - samples.d).squaredNorm();
  return smooth + mu * fit;
}

double default_interp_mu(const EigenBasis& basis,
                         const SampledDistances& samples) {
  const int m = static_cast<int>(samples.indices.size());
  double mean_sq = 0.0;
  int count = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      mean_sq += samples.d(i, j) * samples.d(i, j);
      ++count;
    }
  mean_sq = count > 0 ? mean_sq / count : 1.0;
  const double ratio = static_cast<double>(basis.M) / std::max(m, 1);
  return 1e3 * ratio * ratio / std::max(mean_sq, 1e-300);
}

SpectralDistance interpolate_distances(const EigenBasis& basis,
                                       const SampledDistances& samples,
                                       double mu) {
  if (!(mu > 0.0))
    throw ValidationError(
        "interpolate_distances: mu must be > 0 (the regularizer alone is "
        "singular along the kernel eigenfunction)",
        {});
  const int M = basis.M;
  const int m = static_cast<int>(samples.indices.size());
  const Eigen::MatrixXd p = sampled_rows(basis, samples);
  const Eigen::VectorXd& lam = basis.lambda;

  // Normal operator of the quadratic: L(x) = Lam x + x Lam + mu P'(P x P')P,
  // solved over symmetric x by preconditioned conjugate gradients.
  auto apply = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd out = lam.asDiagonal() * x + x * lam.asDiagonal();
    out.noalias() += mu * (p.transpose() * ((p * x * p.transpose()) * p));
    return out;
  };

  const Eigen::MatrixXd b = mu * (p.transpose() * samples.d * p);

  // Jacobi preconditioner on entries: lam_r + lam_c + mu * g_rr * g_cc.
  const Eigen::VectorXd g = (p.transpose() * p).diagonal();
  Eigen::MatrixXd precond(M, M);
  for (int r = 0; r < M; ++r)
    for (int c = 0; c < M; ++c)
      precond(r, c) =
          1.0 / std::max(lam[r] + lam[c] + mu * g[r] * g[c], 1e-300);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(M, M);
  Eigen::MatrixXd r = b;  // residual b - L(x) at x = 0
  Eigen::MatrixXd z = precond.cwiseProduct(r);
  Eigen::MatrixXd d = z;
  double rz = r.cwiseProduct(z).sum();
  const double b_norm = std::max(b.norm(), 1e-300);
  const int max_iter = 40 * M * M;
  const double tol = 1e-10;

  int it = 0;
  for (; it < max_iter; ++it) {
    if (r.norm() <= tol * b_norm) break;
    const Eigen::MatrixXd ld = apply(d);
    const double dld = d.cwiseProduct(ld).sum();
    if (!(dld > 0))
      throw NumericalError(
          "interpolate_distances: normal operator lost positive definiteness");
    const double step = rz / dld;
    x.noalias() += step * d;
    r.noalias() -= step * ld;
    z = precond.cwiseProduct(r);
    const double rz_next = r.cwiseProduct(z).sum();
    d = z + (rz_next / rz) * d;
    rz = rz_next;
  }
  if (it == max_iter && r.norm() > 100 * tol * b_norm)
    throw NumericalError("interpolate_distances: CG did not converge",
                         r.norm() / b_norm);

  // Data and operator are symmetric, so the minimizer is; kill round-off.
  x = (0.5 * (x + x.transpose())).eval();

  SpectralDistance out;
  out.alpha = x;
  out.mu = mu;
  out.basis_hash = eigenbasis_content_hash(basis);
  const Eigen::MatrixXd misfit = p * x * p.transpose() - samples.d;
  out.fit_rms = std::sqrt(misfit.squaredNorm() / (double(m) * double(m)));
  return out;
}

double reconstruct_distance(const SpectralDistance& sd, const EigenBasis& basis,
                            int i, int j) {
  const int n = static_cast<int>(basis.phi.rows());
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw ValidationError("reconstruct_distance: vertex index out of range", {});
  // Canonical argument order makes reconstruct(i, j) == reconstruct(j, i)
  // bit-exact.
  const int lo = std::min(i, j), hi = std::max(i, j);
  return basis.phi.row(lo) * sd.alpha * basis.phi.row(hi).transpose();
}

}  // namespace sgmds
