#pragma once

#include "apd/certify.hpp"

#include <utility>

namespace apd {

/// Closed-form rate quantities for one (problem, gamma, rho, beta) configuration.
struct RateConstants {
  double q_p = 1.0;
  double q_d = 1.0;
  /// M_gc per constraint: max over X of |grad g_c|_max.
  Vector M_gc;
  /// max-norm diameter of X.
  double D_x = 0.0;
};

/// Primal contraction factor 1 - gamma beta. Throws StepSizeError when beta <= 0
/// or the factor leaves [0, 1).
double qp(double gamma, double beta);

/// Dual factor 3 (1 - rho delta)^2. Not checked; see qd_admissible.
double qd(double rho, double delta);
bool qd_admissible(double rho, double delta);

/// Open interval ((3 - sqrt 3) / (3 delta), (3 + sqrt 3) / (3 delta)) on which q_d < 1.
std::pair<double, double> rho_interval(double delta);

/// The per-update additive term of the one-step dual bound:
///   2 rho^2 M^2 D^2 + 2 rho^2 M^2 q_p^(2 ops) L^2 + 2 rho^2 M^2 D q_p^ops L.
double penalty_terms(double rho, double M_gc, double D_x, double L_x, double q_p, long ops);

/// 2 rho^2 M^2 D^2: what remains of penalty_terms as ops grows.
double asynchrony_penalty(double rho, double M_gc, double D_x);

/// penalty_terms at ops = 0, the largest value it takes.
double worst_case_penalty(double rho, double M_gc, double D_x, double L_x);

/// q_d^(t_c + 1) e0 + (1 - q_d^(t_c + 2)) / (1 - q_d) p. Throws StepSizeError for q_d >= 1.
double dual_envelope(double mu0_err_sq, double q_d, double p_max, long t_c);

/// Per-constraint M_gc, from closed forms when available, sampled otherwise.
Vector constraint_gradient_bounds(const ConvexProblem& p, const SamplingOptions& sampling = {});

RateConstants rate_constants(const ConvexProblem& p, double gamma, double rho, double beta);

}  // namespace apd
