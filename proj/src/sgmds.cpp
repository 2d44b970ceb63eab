#include "sgmds/sgmds.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <numeric>
#include <string>

#include "sgmds/errors.hpp"

namespace sgmds {

namespace {

double frob_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

}  // namespace

SgmdsProblem make_problem(const SpectralDistance& sd1, const EigenBasis& b1,
                          const SpectralDistance& sd2, const EigenBasis& b2,
                          double mu1, double mu2) {
  SgmdsProblem p;
  p.alpha1 = sd1.alpha;
  p.alpha2 = sd2.alpha;
  p.lambda1 = b1.lambda;
  p.lambda2 = b2.lambda;
  p.c1 = b1.phi.transpose() * b1.mass.a;
  p.c2 = b2.phi.transpose() * b2.mass.a;
  if (p.alpha1.rows() != p.m1() || p.alpha2.rows() != p.m2())
    throw ValidationError("make_problem: inconsistent dimensions", {});
  // Default penalty weights put the unitarity and conformality forces on the
  // curvature scale of the distance-commutation term (its mean squared
  // singular value); otherwise the data term drowns the structural terms at
  // realistic distance magnitudes.
  const double mean_m = 0.5 * (p.m1() + p.m2());
  const double s2 = (p.alpha1.squaredNorm() + p.alpha2.squaredNorm()) /
                    std::max(2.0 * mean_m, 1.0);
  const double lam_norm2 = p.lambda1.squaredNorm();
  p.mu2 = mu2 >= 0.0 ? mu2 : 0.25 * s2;
  p.mu1 = mu1 >= 0.0 ? mu1
                     : p.mu2 * p.m1() / std::max(lam_norm2, 1e-300);
  return p;
}

double objective(const Eigen::MatrixXd& alpha, const SgmdsProblem& p) {
  const Eigen::MatrixXd r = alpha * p.alpha1 - p.alpha2 * alpha;
  const Eigen::MatrixXd s =
      Eigen::MatrixXd(p.lambda1.asDiagonal()) -
      alpha.transpose() * p.lambda2.asDiagonal() * alpha;
  const Eigen::MatrixXd u =
      alpha.transpose() * alpha -
      Eigen::MatrixXd::Identity(p.m1(), p.m1());
  return r.squaredNorm() + p.mu1 * s.squaredNorm() + p.mu2 * u.squaredNorm();
}

Eigen::MatrixXd gradient(const Eigen::MatrixXd& alpha, const SgmdsProblem& p) {
  const Eigen::MatrixXd r = alpha * p.alpha1 - p.alpha2 * alpha;
  const Eigen::MatrixXd s =
      Eigen::MatrixXd(p.lambda1.asDiagonal()) -
      alpha.transpose() * p.lambda2.asDiagonal() * alpha;
  const Eigen::MatrixXd u =
      alpha.transpose() * alpha - Eigen::MatrixXd::Identity(p.m1(), p.m1());

  Eigen::MatrixXd grad = 2.0 * (r * p.alpha1.transpose() -
                                p.alpha2.transpose() * r);
  const Eigen::MatrixXd l2a = p.lambda2.asDiagonal() * alpha;
  grad.noalias() -= 2.0 * p.mu1 * (l2a * s.transpose() + l2a * s);
  grad.noalias() += 4.0 * p.mu2 * (alpha * u);
  return grad;
}

Eigen::MatrixXd init_alpha(const SgmdsProblem& p) {
  const int m1 = p.m1(), m2 = p.m2();
  const int m = std::min(m1, m2);

  // Frame alignment through the mixed operators H_i = alpha_i + kappa L_i.
  // A map carrying shape 1 onto shape 2 conjugates both the distance
  // coefficients and the (diagonal) Laplacians, hence H_1 onto H_2 for any
  // kappa. The Laplacian part grades the spectrum cleanly (and is exact for
  // isometric pairs) while the distance part splits its multiplicities, so
  // the eigenframes of H pair up robustly in ascending order. The remaining
  // freedom is one sign per matched eigenvector: a fuzzy-diagonal model
  // alpha = U2 diag(c) U1', c in {-1, +1}.
  const double kappa =
      4.0 * std::sqrt((p.alpha1.squaredNorm() + p.alpha2.squaredNorm()) /
                      std::max(p.lambda1.squaredNorm() +
                                   p.lambda2.squaredNorm(),
                               1e-300));
  Eigen::MatrixXd h1 = 0.5 * (p.alpha1 + p.alpha1.transpose());
  h1 += kappa * Eigen::MatrixXd(p.lambda1.asDiagonal());
  Eigen::MatrixXd h2 = 0.5 * (p.alpha2 + p.alpha2.transpose());
  h2 += kappa * Eigen::MatrixXd(p.lambda2.asDiagonal());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(h1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(h2);
  const Eigen::MatrixXd u1 = es1.eigenvectors().leftCols(m);
  const Eigen::MatrixXd u2 = es2.eigenvectors().leftCols(m);

  // Sign search: c must carry the Laplacian moments of shape 1 onto shape 2,
  // i.e. c_i c_j t2_ij should match t1_ij. Spectral relaxation of the
  // resulting quadratic +-1 problem (leading eigenvector of the gain),
  // polished by greedy sweeps.
  const Eigen::MatrixXd t1 =
      u1.transpose() * p.lambda1.asDiagonal() * u1;
  const Eigen::MatrixXd t2 =
      u2.transpose() * p.lambda2.asDiagonal() * u2;
  Eigen::MatrixXd gain = t1.cwiseProduct(t2);
  gain.diagonal().setZero();

  Eigen::VectorXd sign = Eigen::VectorXd::Ones(m);
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> relax(gain);
    const Eigen::VectorXd lead = relax.eigenvectors().col(m - 1);
    for (int i = 0; i < m; ++i) sign[i] = lead[i] < 0.0 ? -1.0 : 1.0;
  }
  for (int sweep = 0; sweep < 64; ++sweep) {
    bool changed = false;
    for (int i = 0; i < m; ++i) {
      const double field = gain.row(i).dot(sign);
      if (field * sign[i] < 0.0) {
        sign[i] = -sign[i];
        changed = true;
      }
    }
    if (!changed) break;
  }

  Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(m2, m1);
  alpha.topLeftCorner(m2, m1) = u2 * sign.asDiagonal() * u1.transpose();

  // Global orientation from the constant-function coefficients, then the
  // least-change rank-one correction so alpha c1 = c2 holds exactly.
  if ((alpha * p.c1).dot(p.c2) < 0.0) alpha = -alpha;
  const double c1n2 = p.c1.squaredNorm();
  if (c1n2 > 0.0)
    alpha.noalias() += (p.c2 - alpha * p.c1) * (p.c1.transpose() / c1n2);
  return alpha;
}

Eigen::MatrixXd hessian_vec(const Eigen::MatrixXd& alpha,
                            const Eigen::MatrixXd& v, const SgmdsProblem& p) {
  // Term 1 is quadratic in alpha; its Hessian action is the same Sylvester
  // form applied to v.
  const Eigen::MatrixXd rv = v * p.alpha1 - p.alpha2 * v;
  Eigen::MatrixXd h =
      2.0 * (rv * p.alpha1.transpose() - p.alpha2.transpose() * rv);

  // Conformality: S = L1 - a' L2 a, dS(v) = -(v' L2 a + a' L2 v) (symmetric).
  const Eigen::MatrixXd l2a = p.lambda2.asDiagonal() * alpha;
  const Eigen::MatrixXd l2v = p.lambda2.asDiagonal() * v;
  const Eigen::MatrixXd s =
      Eigen::MatrixXd(p.lambda1.asDiagonal()) - alpha.transpose() * l2a;
  const Eigen::MatrixXd ds = -(v.transpose() * l2a + alpha.transpose() * l2v);
  h.noalias() += -4.0 * p.mu1 * (l2v * s + l2a * ds);

  // Unitarity: U = a'a - I, dU(v) = v'a + a'v.
  const Eigen::MatrixXd u =
      alpha.transpose() * alpha - Eigen::MatrixXd::Identity(p.m1(), p.m1());
  const Eigen::MatrixXd du = v.transpose() * alpha + alpha.transpose() * v;
  h.noalias() += 4.0 * p.mu2 * (v * u + alpha * du);
  return h;
}

namespace {

// Newton-CG with Armijo backtracking over matrix unknowns. The CG loop is
// matrix-free and preconditioned; it exits on negative curvature. Records
// the objective value of every accepted step. hess_factory(alpha) returns a
// cheap apply(v) closure so per-iterate products are shared across the CG
// loop.
struct InnerResult {
  bool stationary = false;
  int iterations = 0;
};

template <typename FValue, typename FGrad, typename FHessFactory,
          typename FPrecFactory>
InnerResult newton_cg_minimize(Eigen::MatrixXd& alpha, const FValue& value,
                               const FGrad& grad_fn,
                               const FHessFactory& hess_factory,
                               const FPrecFactory& precond_factory,
                               int max_iter, double tol,
                               std::vector<double>& accepted_values) {
  double f = value(alpha);
  if (!std::isfinite(f))
    throw NumericalError("sgmds solve: objective is not finite at the start");
  accepted_values.push_back(f);

  InnerResult res;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd g = grad_fn(alpha);
    const double g_norm = g.norm();
    if (g_norm <= tol * (1.0 + std::abs(f))) {
      res.stationary = true;
      res.iterations = it;
      return res;
    }

    // Inexact Newton: solve H d = -g by preconditioned CG with a forcing
    // tolerance that tightens as the gradient shrinks.
    const double forcing = std::min(0.1, std::sqrt(g_norm));
    const double cg_tol = std::max(forcing * g_norm, 1e-14 * (1.0 + g_norm));
    const auto hess_apply = hess_factory(alpha);
    const auto precond = precond_factory(alpha);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(alpha.rows(), alpha.cols());
    Eigen::MatrixXd r = -g;
    Eigen::MatrixXd z = precond(r);
    Eigen::MatrixXd dir = z;
    double rz = frob_dot(r, z);
    const int cg_cap = 250;
    for (int cg = 0; cg < cg_cap; ++cg) {
      const Eigen::MatrixXd hd = hess_apply(dir);
      const double curvature = frob_dot(dir, hd);
      if (curvature <= 1e-14 * dir.squaredNorm()) {
        if (cg == 0) d = z;  // fall back to the preconditioned gradient
        break;
      }
      const double step = rz / curvature;
      d.noalias() += step * dir;
      r.noalias() -= step * hd;
      if (r.norm() <= cg_tol) break;
      z = precond(r);
      const double rz_next = frob_dot(r, z);
      dir = z + (rz_next / rz) * dir;
      rz = rz_next;
    }

    double slope = frob_dot(g, d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -g_norm * g_norm;
    }

    // Armijo backtracking.
    double step = 1.0;
    double f_new = 0.0;
    Eigen::MatrixXd alpha_new;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      alpha_new = alpha + step * d;
      f_new = value(alpha_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.stationary = g_norm <= 10 * tol * (1.0 + std::abs(f));
      res.iterations = it;
      return res;  // stalled at numerical precision
    }
    alpha = alpha_new;
    f = f_new;
    accepted_values.push_back(f);
  }
  res.iterations = max_iter;
  return res;
}

}  // namespace

FunctionalMapCoeffs solve(const SgmdsProblem& problem, const SolverConfig& cfg,
                          const std::optional<Eigen::MatrixXd>& init) {
  SgmdsProblem p = problem;
  if (cfg.mu1 >= 0.0) p.mu1 = cfg.mu1;
  if (cfg.mu2 >= 0.0) p.mu2 = cfg.mu2;

  FunctionalMapCoeffs out;
  Eigen::MatrixXd alpha = init ? *init : init_alpha(p);
  if (alpha.rows() != p.m2() || alpha.cols() != p.m1())
    throw ValidationError("solve: initial alpha has wrong dimensions", {});

  const double c1_norm = std::max(p.c1.norm(), 1e-300);
  const double c2_norm = std::max(p.c2.norm(), 1e-300);

  // The whole inner optimization runs in the eigenframes of the two
  // coefficient matrices: with alpha = U2 * beta * U1' the first term turns
  // into an elementwise product (beta .* gap), the remaining terms keep
  // their shape under the unitary change of frame, and the preconditioner
  // needs no frame transforms at all. Every norm below matches the
  // original-frame objective exactly.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(
      0.5 * (p.alpha1 + p.alpha1.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(
      0.5 * (p.alpha2 + p.alpha2.transpose()));
  const Eigen::MatrixXd u1 = es1.eigenvectors();
  const Eigen::MatrixXd u2 = es2.eigenvectors();
  const Eigen::VectorXd sig1 = es1.eigenvalues();
  const Eigen::VectorXd sig2 = es2.eigenvalues();
  const Eigen::VectorXd ct1 = u1.transpose() * p.c1;
  const Eigen::VectorXd ct2 = u2.transpose() * p.c2;
  const Eigen::MatrixXd lt1 =
      u1.transpose() * p.lambda1.asDiagonal() * u1;
  const Eigen::MatrixXd lt2 =
      u2.transpose() * p.lambda2.asDiagonal() * u2;
  Eigen::MatrixXd gap(p.m2(), p.m1());
  for (int i = 0; i < p.m2(); ++i)
    for (int j = 0; j < p.m1(); ++j) gap(i, j) = sig1[j] - sig2[i];
  const Eigen::MatrixXd gap2 = gap.cwiseProduct(gap);
  const Eigen::MatrixXd identity_m1 =
      Eigen::MatrixXd::Identity(p.m1(), p.m1());
  const double lam2_mean = p.lambda2.size() > 0 ? p.lambda2.mean() : 0.0;

  double rho = cfg.penalty_start;
  Eigen::VectorXd y1 = Eigen::VectorXd::Zero(p.m2());  // transformed frame
  Eigen::VectorXd y2 = Eigen::VectorXd::Zero(p.m1());

  Eigen::MatrixXd beta = u2.transpose() * alpha * u1;
  Eigen::MatrixXd best_beta = beta;
  double best_f = std::numeric_limits<double>::infinity();
  double best_violation = std::numeric_limits<double>::infinity();
  double prev_violation = std::numeric_limits<double>::infinity();
  bool best_feasible = false;
  bool stationary = false;

  const auto base_objective = [&](const Eigen::MatrixXd& b) {
    const Eigen::MatrixXd lt2b = lt2 * b;
    const Eigen::MatrixXd s = lt1 - b.transpose() * lt2b;
    const Eigen::MatrixXd u = b.transpose() * b - identity_m1;
    return b.cwiseProduct(gap).squaredNorm() + p.mu1 * s.squaredNorm() +
           p.mu2 * u.squaredNorm();
  };

  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    const auto value = [&](const Eigen::MatrixXd& b) {
      const Eigen::VectorXd h1 = b * ct1 - ct2;
      const Eigen::VectorXd h2 = b.transpose() * ct2 - ct1;
      return base_objective(b) + y1.dot(h1) + y2.dot(h2) +
             rho * (h1.squaredNorm() + h2.squaredNorm());
    };
    const auto grad = [&](const Eigen::MatrixXd& b) {
      const Eigen::VectorXd h1 = b * ct1 - ct2;
      const Eigen::VectorXd h2 = b.transpose() * ct2 - ct1;
      const Eigen::MatrixXd lt2b = lt2 * b;
      const Eigen::MatrixXd s = lt1 - b.transpose() * lt2b;
      Eigen::MatrixXd g = 2.0 * b.cwiseProduct(gap2);
      g.noalias() += -4.0 * p.mu1 * (lt2b * s);
      g.noalias() +=
          4.0 * p.mu2 * (b * (b.transpose() * b - identity_m1));
      g.noalias() += (y1 + 2.0 * rho * h1) * ct1.transpose();
      g.noalias() += ct2 * (y2 + 2.0 * rho * h2).transpose();
      return g;
    };
    // Gauss-Newton model (J'J of each residual): positive semidefinite, so
    // the CG solve never exits on negative curvature, and near the
    // small-residual optima of this problem it is essentially exact. The
    // beta-dependent factor is shared across the whole CG solve.
    const auto hess = [&](const Eigen::MatrixXd& b) {
      auto lt2b = std::make_shared<Eigen::MatrixXd>(lt2 * b);
      return [&, b, lt2b](const Eigen::MatrixXd& v) {
        Eigen::MatrixXd h = 2.0 * v.cwiseProduct(gap2);
        const Eigen::MatrixXd lt2v = lt2 * v;
        const Eigen::MatrixXd ds =
            -(v.transpose() * (*lt2b) + b.transpose() * lt2v);
        h.noalias() += -4.0 * p.mu1 * ((*lt2b) * ds);
        const Eigen::MatrixXd du = v.transpose() * b + b.transpose() * v;
        h.noalias() += 4.0 * p.mu2 * (b * du);
        h.noalias() += 2.0 * rho * ((v * ct1) * ct1.transpose());
        h.noalias() += 2.0 * rho * (ct2 * (ct2.transpose() * v));
        return h;
      };
    };

    // Entrywise preconditioner plus an exact 2x2 model of the unitarity
    // coupling between (i,j) and (j,i) near an orthogonal iterate (stiff
    // symmetric combination, soft antisymmetric one).
    Eigen::MatrixXd diag(p.m2(), p.m1());
    for (int i = 0; i < p.m2(); ++i)
      for (int j = 0; j < p.m1(); ++j) {
        diag(i, j) = 2.0 * gap2(i, j) + 4.0 * p.mu2 +
                     4.0 * p.mu1 * lam2_mean * lam2_mean +
                     2.0 * rho * (ct1[j] * ct1[j] + ct2[i] * ct2[i]);
      }
    const double floor = 1e-10 * diag.maxCoeff() + 1e-300;
    const int m_sq = std::min(p.m1(), p.m2());
    const auto precond = [&, floor, m_sq](const Eigen::MatrixXd& b) {
      auto bdiag = std::make_shared<Eigen::VectorXd>(
          b.topLeftCorner(m_sq, m_sq).diagonal());
      return [&, floor, m_sq, bdiag](const Eigen::MatrixXd& rt) {
        Eigen::MatrixXd zt(rt.rows(), rt.cols());
        for (int i = 0; i < rt.rows(); ++i)
          for (int j = 0; j < rt.cols(); ++j) {
            if (i < m_sq && j < m_sq && j > i) {
              const double a11 = std::max(diag(i, j), floor);
              const double a22 = std::max(diag(j, i), floor);
              const double b_c =
                  4.0 * p.mu2 * (*bdiag)[i] * (*bdiag)[j];
              const double det = a11 * a22 - b_c * b_c;
              if (det > 1e-12 * a11 * a22) {
                zt(i, j) = (a22 * rt(i, j) - b_c * rt(j, i)) / det;
                zt(j, i) = (a11 * rt(j, i) - b_c * rt(i, j)) / det;
              } else {
                zt(i, j) = rt(i, j) / a11;
                zt(j, i) = rt(j, i) / a22;
              }
            } else if (i >= m_sq || j >= m_sq || j == i) {
              zt(i, j) = rt(i, j) / std::max(diag(i, j), floor);
            }
          }
        return zt;
      };
    };

    out.augmented_history.emplace_back();
    const InnerResult inner =
        newton_cg_minimize(beta, value, grad, hess, precond, cfg.inner_iters,
                           cfg.inner_tol, out.augmented_history.back());
    out.inner_iterations += inner.iterations;
    ++out.outer_iterations;

    const double f = base_objective(beta);
    if (!std::isfinite(f))
      throw NumericalError(
          "sgmds solve: objective became NaN at outer iteration " +
          std::to_string(outer));
    const Eigen::VectorXd h1 = beta * ct1 - ct2;
    const Eigen::VectorXd h2 = beta.transpose() * ct2 - ct1;
    const double violation = std::max(h1.norm() / c2_norm, h2.norm() / c1_norm);
    const bool feasible = h1.norm() <= cfg.constraint_tol * c2_norm &&
                          h2.norm() <= cfg.constraint_tol * c1_norm;

    // Incumbent: feasible-enough iterates ranked by objective; before any
    // iterate is feasible, rank by violation.
    const bool take = best_feasible
                          ? (feasible && f <= best_f)
                          : (feasible || violation <= best_violation);
    if (take) {
      best_beta = beta;
      best_f = f;
      best_violation = violation;
      best_feasible = feasible;
      stationary = inner.stationary;
      // History logs monotone objective progress of accepted iterates.
      if (out.objective_history.empty() || f <= out.objective_history.back())
        out.objective_history.push_back(f);
    } else {
      beta = best_beta;
    }

    // Stop once feasible and stationary -- but when the residual sits just
    // under the tolerance, grant one more multiplier round so the final
    // margin is comfortable rather than marginal.
    if (take && feasible && inner.stationary) {
      const bool comfortable = violation <= 0.3 * cfg.constraint_tol;
      const bool still_improving = violation <= 0.5 * prev_violation;
      if (comfortable || !still_improving) break;
    }
    prev_violation = violation;

    // Multiplier update from the current iterate, then ramp the penalty.
    y1 += 2.0 * rho * (beta * ct1 - ct2);
    y2 += 2.0 * rho * (beta.transpose() * ct2 - ct1);
    rho *= cfg.penalty_growth;
  }

  out.alpha = u2 * best_beta * u1.transpose();
  const Eigen::VectorXd h1 = out.alpha * p.c1 - p.c2;
  const Eigen::VectorXd h2 = out.alpha.transpose() * p.c2 - p.c1;
  out.mass_residual_1 = h1.norm();
  out.mass_residual_2 = h2.norm();
  out.mass_residual_rel_1 = out.mass_residual_1 / c2_norm;
  out.mass_residual_rel_2 = out.mass_residual_2 / c1_norm;
  out.constraint_residual = std::max(out.mass_residual_1, out.mass_residual_2);
  out.unitarity_residual =
      (out.alpha.transpose() * out.alpha -
       Eigen::MatrixXd::Identity(p.m1(), p.m1()))
          .norm();
  out.conformality_residual =
      (Eigen::MatrixXd(p.lambda1.asDiagonal()) -
       out.alpha.transpose() * p.lambda2.asDiagonal() * out.alpha)
          .norm();
  out.converged = stationary &&
                  out.mass_residual_1 <= cfg.constraint_tol * c2_norm &&
                  out.mass_residual_2 <= cfg.constraint_tol * c1_norm;
  return out;
}

}  // namespace sgmds
