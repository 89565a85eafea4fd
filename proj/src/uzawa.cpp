#include "apd/uzawa.hpp"

#include "apd/projection.hpp"

#include <algorithm>

namespace apd {

SyncIterate uzawa_step(const ConvexProblem& p, const DualBox& dual_box, const SyncIterate& it,
                       double gamma, double rho) {
  SyncIterate next;
  next.x = project_box(it.x - gamma * grad_x(p, it.x, it.mu), p.box());
  next.mu = project_dual(it.mu + rho * grad_mu(p, it.x, it.mu), dual_box);
  next.k = it.k + 1;
  return next;
}

SaddleResult solve_saddle(const ConvexProblem& p, const DualBox& dual_box, double gamma,
                          double rho, const SolveOptions& opts, const Vector* x0,
                          const Vector* mu0) {
  SyncIterate it;
  it.x = x0 ? project_box(*x0, p.box()) : p.box().midpoint();
  it.mu = mu0 ? project_dual(*mu0, dual_box) : Vector::Zero(p.m());
  SaddleResult out;
  for (long k = 0; k < opts.max_iters; ++k) {
    SyncIterate next = uzawa_step(p, dual_box, it, gamma, rho);
    out.residual = (next.x - it.x).cwiseAbs().maxCoeff() +
                   (p.m() > 0 ? (next.mu - it.mu).cwiseAbs().maxCoeff() : 0.0);
    it = std::move(next);
    out.iterations = k + 1;
    if (out.residual < opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(it.x);
  out.mu = std::move(it.mu);
  return out;
}

FixedPointResult inner_primal_fixed_point(const ConvexProblem& p, const Vector& mu_fixed,
                                          double gamma, double tol, long max_iters,
                                          const Vector* x0) {
  require(mu_fixed.size() == p.m(), "inner_primal_fixed_point: dimension mismatch");
  FixedPointResult out;
  Vector x = x0 ? project_box(*x0, p.box()) : p.box().midpoint();
  double prev_step = -1.0;
  for (long k = 0; k < max_iters; ++k) {
    Vector next = project_box(x - gamma * grad_x(p, x, mu_fixed), p.box());
    double step = (next - x).cwiseAbs().maxCoeff();
    // Ratios of tiny steps are dominated by rounding.
    if (prev_step > 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff()))
      out.max_contraction = std::max(out.max_contraction, step / prev_step);
    prev_step = step;
    x = std::move(next);
    out.iterations = k + 1;
    out.residual = step;
    if (step < tol) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

SaddleResidual saddle_residual(const ConvexProblem& p, const DualBox& dual_box, const Vector& x,
                               const Vector& mu, double gamma, double rho) {
  SaddleResidual r;
  r.primal = (x - project_box(x - gamma * grad_x(p, x, mu), p.box())).cwiseAbs().maxCoeff();
  r.dual = p.m() == 0
               ? 0.0
               : (mu - project_dual(mu + rho * grad_mu(p, x, mu), dual_box)).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace apd
