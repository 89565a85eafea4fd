#pragma once

#include "apd/problem.hpp"

namespace apd {

struct SyncIterate {
  Vector x;
  Vector mu;
  long k = 0;
};

/// One projected primal-dual (Uzawa) step. Both updates read the pre-update
/// (x, mu), i.e. Jacobi order:
///   x+  = Pi_X[x - gamma grad_x L_delta(x, mu)]
///   mu+ = Pi_M[mu + rho (g(x) - delta mu)]
SyncIterate uzawa_step(const ConvexProblem& p, const DualBox& dual_box, const SyncIterate& it,
                       double gamma, double rho);

struct SaddleResult {
  Vector x;
  Vector mu;
  long iterations = 0;
  /// Last |x+ - x|_max + |mu+ - mu|_max.
  double residual = 0.0;
  bool converged = false;
};

struct SolveOptions {
  double tol = 1e-10;
  long max_iters = 10'000'000;
};

/// Runs uzawa_step until the step residual drops below tol. The result is the
/// reference saddle point (x_delta, mu_delta) for error curves.
SaddleResult solve_saddle(const ConvexProblem& p, const DualBox& dual_box, double gamma,
                          double rho, const SolveOptions& opts = {},
                          const Vector* x0 = nullptr, const Vector* mu0 = nullptr);

struct FixedPointResult {
  Vector x;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// max over sweeps of |x_{s+1} - x_s|_max / |x_s - x_{s-1}|_max, the observed
  /// contraction factor of the projected gradient map.
  double max_contraction = 0.0;
};

/// Fixed point x*(mu) of f(x) = Pi_X[x - gamma grad_x L_delta(x, mu)] for frozen mu.
FixedPointResult inner_primal_fixed_point(const ConvexProblem& p, const Vector& mu_fixed,
                                          double gamma, double tol = 1e-13,
                                          long max_iters = 10'000'000,
                                          const Vector* x0 = nullptr);

/// max-norm residuals of the projected-gradient optimality conditions at (x, mu).
struct SaddleResidual {
  double primal = 0.0;
  double dual = 0.0;
};

SaddleResidual saddle_residual(const ConvexProblem& p, const DualBox& dual_box, const Vector& x,
                               const Vector& mu, double gamma, double rho);

}  // namespace apd
