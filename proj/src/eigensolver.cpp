// Truncated generalized eigensolver for the Laplace-Beltrami pencil
// W phi = lambda A phi.
//
// A is diagonal, so the pencil is symmetrized exactly:
//   S = A^{-1/2} W A^{-1/2},  S y = lambda y,  phi = A^{-1/2} y.
// The smallest eigenvalues of S are found by Lanczos on (S + sigma I)^{-1}
// (sparse LDLT factorization, full reorthogonalization). Exactly degenerate
// clusters are post-rotated to the eigenbasis of an intrinsic per-vertex
// moment so the in-cluster basis is reproducible across vertex relabelings
// and rigid motions of the same surface.

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include "sgmds/errors.hpp"
#include "sgmds/laplacian.hpp"

namespace sgmds {

namespace {

double hash01(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

Eigen::VectorXd deterministic_vector(int n, std::uint64_t salt) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i)
    v[i] = hash01(static_cast<std::uint64_t>(i) + salt * 0x100000001b3ull) - 0.5;
  return v;
}

double sparse_inf_norm(const Eigen::SparseMatrix<double>& m) {
  Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      rowsum[it.row()] += std::abs(it.value());
  return rowsum.maxCoeff();
}

// Rotates the columns of a (nearly) degenerate cluster to the eigenbasis of
// the A-weighted moment of an intrinsic scalar field -- but only when that
// moment genuinely discriminates the cluster. When its eigenvalues tie (the
// field cannot see inside the cluster, e.g. under a continuum symmetry),
// rotating by its noise-level eigenvectors would scramble an otherwise
// reproducible basis, so the cluster is left as produced by the iteration.
void canonicalize_cluster(Eigen::Ref<Eigen::MatrixXd> cols,
                          const Eigen::VectorXd& a,
                          const Eigen::VectorXd& h_primary,
                          const Eigen::VectorXd& h_secondary) {
  const int k = static_cast<int>(cols.cols());
  if (k < 2) return;

  for (const Eigen::VectorXd* field : {&h_primary, &h_secondary}) {
    Eigen::MatrixXd moment(k, k);
    const Eigen::VectorXd weight = a.cwiseProduct(*field);
    for (int r = 0; r < k; ++r)
      for (int s = r; s < k; ++s) {
        const double v = cols.col(r).cwiseProduct(weight).dot(cols.col(s));
        moment(r, s) = v;
        moment(s, r) = v;
      }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(moment);
    const Eigen::VectorXd& mu = eig.eigenvalues();
    const double scale =
        std::max({std::abs(mu[0]), std::abs(mu[k - 1]), 1e-300});
    double min_gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i < k; ++i) min_gap = std::min(min_gap, mu[i] - mu[i - 1]);
    if (min_gap > 1e-5 * scale) {
      cols = cols * eig.eigenvectors();
      return;
    }
  }
}

}  // namespace

EigenBasis eigenbasis(const StiffnessMatrix& wmat, const MassDiagonal& mass,
                      int M, const EigenOptions& opts) {
  const int n = static_cast<int>(wmat.w.rows());
  if (M < 2) throw ValidationError("eigenbasis: M must be >= 2", {});
  if (M > n) throw ValidationError("eigenbasis: M must be <= n", {});

  const Eigen::VectorXd inv_sqrt_a = mass.a.cwiseSqrt().cwiseInverse();

  // S = A^{-1/2} W A^{-1/2}
  Eigen::SparseMatrix<double> s = wmat.w;
  for (int k = 0; k < s.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(s, k); it; ++it)
      it.valueRef() *= inv_sqrt_a[it.row()] * inv_sqrt_a[it.col()];

  const double s_scale = std::max(sparse_inf_norm(s), 1e-300);
  const double w_scale = std::max(sparse_inf_norm(wmat.w), 1e-300);

  // Ask for a few extra pairs so a degeneracy cluster cut by the truncation
  // can still be completed and canonicalized before we trim back to M.
  const int m_int = std::min(n, M + 16);

  const double trace_mean = [&s, n] {
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += s.coeff(i, i);
    return tr / n;
  }();
  const double sigma = std::max(1e-3 * trace_mean, 1e-12 * s_scale);

  Eigen::SparseMatrix<double> shifted = s;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += sigma;
  shifted.makeCompressed();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor(shifted);
  if (factor.info() != Eigen::Success)
    throw NumericalError("eigenbasis: factorization of the shifted operator failed");

  // Lanczos with full reorthogonalization on T = (S + sigma I)^{-1}.
  // Full reorthogonalization also lets round-off repopulate directions a
  // single-vector Krylov space misses, which is what makes degenerate
  // eigenvalue copies converge.
  const int jmax = std::min(n, std::max(4 * m_int + 80, 160));
  const long matvec_cap =
      opts.max_iterations > 0
          ? opts.max_iterations
          : std::max<long>(10L * M * static_cast<long>(std::sqrt(double(n))),
                           jmax);

  Eigen::MatrixXd basis(n, jmax);
  std::vector<double> diag, offdiag;  // tridiagonal coefficients
  diag.reserve(static_cast<std::size_t>(jmax));
  offdiag.reserve(static_cast<std::size_t>(jmax));

  std::uint64_t salt = 1;
  auto fresh_start = [&](int j) -> bool {
    // Insert a deterministic vector orthogonal to the current basis.
    for (int attempt = 0; attempt < 64; ++attempt) {
      Eigen::VectorXd v = deterministic_vector(n, salt++);
      for (int pass = 0; pass < 2; ++pass)
        if (j > 0) v -= basis.leftCols(j) * (basis.leftCols(j).transpose() * v);
      const double norm = v.norm();
      if (norm > 1e-8 * std::sqrt(double(n))) {
        basis.col(j) = v / norm;
        return true;
      }
    }
    return false;
  };

  if (!fresh_start(0))
    throw NumericalError("eigenbasis: could not build a start vector");

  int j = 0;  // index of the newest basis column
  long matvecs = 0;
  double beta_prev = 0.0;
  bool after_restart = false;

  Eigen::VectorXd ritz_values;   // converged lambda estimates
  Eigen::MatrixXd ritz_vectors;  // reconstructed eigenvectors of S
  double worst_resid = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool space_exhausted = false;

  auto tridiag_eig = [&](int cols, Eigen::VectorXd& theta,
                         Eigen::MatrixXd& vecs) {
    Eigen::MatrixXd tm = Eigen::MatrixXd::Zero(cols, cols);
    for (int i = 0; i < cols; ++i) {
      tm(i, i) = diag[static_cast<std::size_t>(i)];
      if (i + 1 < cols) {
        tm(i, i + 1) = offdiag[static_cast<std::size_t>(i)];
        tm(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tm);
    theta = eig.eigenvalues();
    vecs = eig.eigenvectors();
  };

  // Extracts the m_int smallest-lambda Ritz pairs from the first `cols`
  // columns and checks them directly against S. Returns true when every
  // residual is within tolerance. The cheap Ritz-residual screen is skipped
  // on the final attempt so the definitive direct check always runs.
  auto try_extract = [&](int cols, bool final_attempt) -> bool {
    if (cols < std::min(n, m_int)) return false;
    Eigen::VectorXd theta;
    Eigen::MatrixXd tvecs;
    tridiag_eig(cols, theta, tvecs);

    // Largest theta of T correspond to the smallest lambda of S.
    const int take = std::min(n, m_int);
    const double edge_coupling =
        static_cast<int>(offdiag.size()) >= cols
            ? std::abs(offdiag[static_cast<std::size_t>(cols - 1)])
            : 0.0;
    for (int k = 0; k < take; ++k) {
      const int idx = cols - 1 - k;
      const double theta_k = theta[idx];
      if (theta_k <= 0 && !final_attempt) return false;
      const double ritz_resid = edge_coupling * std::abs(tvecs(cols - 1, idx));
      if (ritz_resid > 1e-10 * theta_k && cols < n && !final_attempt)
        return false;
    }

    Eigen::MatrixXd y(n, take);
    Eigen::VectorXd lam(take);
    for (int k = 0; k < take; ++k) {
      const int idx = cols - 1 - k;
      if (theta[idx] <= 1e-300) return false;
      y.col(k) = basis.leftCols(cols) * tvecs.col(idx);
      lam[k] = 1.0 / theta[idx] - sigma;
    }
    worst_resid = 0.0;
    for (int k = 0; k < take; ++k) {
      const double r = (s * y.col(k) - lam[k] * y.col(k)).norm();
      worst_resid = std::max(worst_resid, r / s_scale);
    }
    if (worst_resid <= opts.residual_tol) {
      ritz_values = lam;
      ritz_vectors = y;
      return true;
    }
    return false;
  };

  while (true) {
    Eigen::VectorXd w = factor.solve(basis.col(j));
    ++matvecs;
    if (j > 0 && !after_restart) w -= beta_prev * basis.col(j - 1);
    const double alpha = basis.col(j).dot(w);
    w -= alpha * basis.col(j);
    for (int pass = 0; pass < 2; ++pass)
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    const double beta = w.norm();
    diag.push_back(alpha);

    const bool have_room = j + 1 < jmax && matvecs < matvec_cap;
    after_restart = false;
    if (have_room) {
      if (beta > 1e-13) {
        basis.col(j + 1) = w / beta;
        offdiag.push_back(beta);
        beta_prev = beta;
      } else {
        // Invariant subspace; continue from a fresh orthogonal direction.
        if (!fresh_start(j + 1)) {
          space_exhausted = true;
        } else {
          offdiag.push_back(0.0);
          after_restart = true;
          beta_prev = 0.0;
        }
      }
    }
    ++j;

    const int cols = j;
    if (space_exhausted || !have_room) {
      converged = try_extract(cols, /*final_attempt=*/true);
      break;
    }
    if (cols % 8 == 0 && try_extract(cols, /*final_attempt=*/false)) {
      converged = true;
      break;
    }
  }

  if (!converged)
    throw NumericalError(
        "eigenbasis: Lanczos did not converge (best residual " +
            std::to_string(worst_resid) + ")",
        worst_resid);

  // Sort ascending by eigenvalue.
  const int take = static_cast<int>(ritz_values.size());
  std::vector<int> order(static_cast<std::size_t>(take));
  for (int i = 0; i < take; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return ritz_values[a] < ritz_values[b];
  });
  Eigen::MatrixXd y(n, take);
  Eigen::VectorXd lam(take);
  for (int i = 0; i < take; ++i) {
    y.col(i) = ritz_vectors.col(order[static_cast<std::size_t>(i)]);
    lam[i] = ritz_values[order[static_cast<std::size_t>(i)]];
  }

  // Clamp round-off negatives in the kernel.
  for (int i = 0; i < take; ++i) {
    if (lam[i] < 0) {
      if (lam[i] < -1e-6 * s_scale)
        throw NumericalError("eigenbasis: significantly negative eigenvalue");
      lam[i] = 0.0;
    }
  }

  // Polish orthonormality.
  {
    Eigen::MatrixXd gram = y.transpose() * y;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() == Eigen::Success)
      y = llt.matrixL().solve(y.transpose()).transpose();
  }

  // Deterministic in-cluster bases for (near-)exactly degenerate eigenvalues.
  // Merging is relative to the eigenvalue magnitude: exact multiplets agree
  // to round-off while discretization-split ones sit several orders higher.
  {
    const double lam_floor = 1e-12 * std::max(std::abs(lam[take - 1]), 1e-300);
    std::vector<std::pair<int, int>> clusters;  // [begin, end)
    int start = 0;
    for (int i = 1; i <= take; ++i) {
      const bool merge =
          i < take &&
          lam[i] - lam[i - 1] <=
              1e-7 * std::max(std::abs(lam[i]), lam_floor);
      if (!merge) {
        clusters.emplace_back(start, i);
        start = i;
      }
    }
    // Intrinsic scalar fields from complete clusters only (basis-invariant).
    double lam_mean = 0.0;
    int npos = 0;
    for (int i = 0; i < take; ++i)
      if (lam[i] > 0) {
        lam_mean += lam[i];
        ++npos;
      }
    lam_mean = npos > 0 ? lam_mean / npos : 1.0;
    const double t1 = 1.0 / lam_mean, t2 = t1 / 4.0;
    Eigen::VectorXd h1 = Eigen::VectorXd::Zero(n), h2 = Eigen::VectorXd::Zero(n);
    for (const auto& [b, e] : clusters) {
      for (int k = b; k < e; ++k) {
        const Eigen::VectorXd sq = y.col(k).cwiseAbs2().cwiseProduct(
            inv_sqrt_a.cwiseAbs2());  // phi_k^2 = (y_k / sqrt(a))^2
        h1 += std::exp(-lam[k] * t1) * sq;
        h2 += std::exp(-lam[k] * t2) * sq;
      }
    }
    for (const auto& [b, e] : clusters) {
      if (e - b > 1) {
        // Moment in phi coordinates: weights a * h applied to y/sqrt(a)
        // reduce to plain h on y.
        Eigen::VectorXd ones_a = Eigen::VectorXd::Ones(n);
        canonicalize_cluster(y.middleCols(b, e - b), ones_a, h1, h2);
      }
    }
  }

  // Truncate to M and map back: phi = A^{-1/2} y.
  EigenBasis out;
  out.M = M;
  out.mass = mass;
  out.lambda = lam.head(M);
  out.phi = inv_sqrt_a.asDiagonal() * y.leftCols(M);

  // Sign convention: the entry of largest magnitude is positive; ties break
  // to the lowest vertex index.
  for (int k = 0; k < M; ++k) {
    int best = 0;
    double best_abs = std::abs(out.phi(0, k));
    for (int i = 1; i < n; ++i) {
      const double v = std::abs(out.phi(i, k));
      if (v > best_abs) {
        best_abs = v;
        best = i;
      }
    }
    if (out.phi(best, k) < 0) out.phi.col(k) = -out.phi.col(k);
  }

  // Final validation against the pencil.
  double worst = 0.0;
  for (int k = 0; k < M; ++k) {
    const Eigen::VectorXd r =
        wmat.w * out.phi.col(k) -
        out.lambda[k] * mass.a.cwiseProduct(out.phi.col(k));
    worst = std::max(worst, r.norm() / w_scale);
  }
  if (worst > 100 * opts.residual_tol)
    throw NumericalError("eigenbasis: residual degraded after postprocessing",
                         worst);
  return out;
}

}  // namespace sgmds
