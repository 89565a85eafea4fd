#pragma once

#include "apd/problem.hpp"
#include "apd/trace.hpp"

#include <map>
#include <vector>

namespace apd {

/// x*(mu): fixed point of the projected gradient map for frozen mu, memoized per
/// mu and warm-started from the previous solve.
class FixedPointCache {
 public:
  FixedPointCache(ConvexProblem p, double gamma, double tol = 1e-13);

  /// Throws std::runtime_error when the inner iteration fails to converge.
  const Vector& operator()(const Vector& mu);
  std::size_t size() const { return cache_.size(); }

 private:
  ConvexProblem p_;
  double gamma_;
  double tol_;
  std::map<std::vector<double>, Vector> cache_;
  Vector warm_;
};

/// max_i max_{j relevant to i} |x^i_j - ref_j|, over the columns of `x_local`.
double local_copy_error(const Matrix& x_local, const Vector& ref,
                        const std::vector<std::vector<long>>& relevant);

struct PrimalEnvelopeReport {
  double q_p = 0.0;
  /// Per trace row: q_p^ops * L(epoch) and the observed max local-copy error.
  std::vector<double> bound;
  std::vector<double> observed;
  /// Per epoch: max_j |x^j(k_t) - x*(t)|_max at the epoch start.
  std::vector<double> epoch_L;
  long violations = 0;
  double worst_excess = 0.0;  // max(observed - bound), may be negative
  /// Largest E(next cycle) / E(previous cycle) over completed ops cycles.
  double max_cycle_ratio = 0.0;
  long cycles = 0;
};

/// Audits every row of a trace recorded with local copies against
/// |x^i(k) - x*(t)|_max <= q_p^ops(k,t) max_j |x^j(k_t) - x*(t)|_max, slack `slack`.
PrimalEnvelopeReport primal_envelope(const Trace& trace, FixedPointCache& x_star, double q_p,
                                     double slack = 1e-9);

struct DualStepCheck {
  long k = 0;
  long c = 0;
  long t_c = 0;
  long ops = 0;
  double L_x = 0.0;
  double lhs = 0.0;  // |mu_c(t_c + 1) - mu_hat_c|^2
  double rhs = 0.0;  // q_d |mu_c(t_c) - mu_hat_c|^2 + penalty_terms(...)
};

struct DualStepReport {
  double q_d = 0.0;
  std::vector<DualStepCheck> checks;
  long violations = 0;
  double worst_excess = 0.0;
  /// max L_x over epochs in which a dual update happened.
  double max_L_x = 0.0;
};

/// One-step dual inequality at every gated dual update, with ops measured when the
/// first snapshot of the epoch reached the dual agent.
DualStepReport dual_one_step(const Trace& trace, FixedPointCache& x_star, const Vector& mu_hat,
                             double rho, double delta, double q_p, const Vector& M_gc,
                             double D_x, double slack = 1e-9);

struct DualAsymptoteReport {
  double q_d = 0.0;
  /// Per constraint: p_max = 2 rho^2 M^2 (D^2 + L^2 + D L) and p_max / (1 - q_d).
  Vector p_max;
  Vector asymptote;
  /// Per constraint: max squared error over the last `tail_fraction` of updates.
  Vector limsup;
  /// Per update: the geometric envelope value and whether it held.
  long envelope_violations = 0;
  double envelope_worst_excess = 0.0;
  bool holds = false;
};

DualAsymptoteReport dual_asymptote(const Trace& trace, const Vector& mu0, const Vector& mu_hat,
                                   double rho, double delta, const Vector& M_gc, double D_x,
                                   double L_x, double tail_fraction = 0.5, double slack = 1e-9);

struct OverallFit {
  /// Nonnegative least-squares fit of |x^i - x_hat|_2 ~ K1 q_p^ops + K2 |mu - mu_hat|_2.
  double K1_ls = 0.0;
  double K2_ls = 0.0;
  /// Feasible pair minimizing K1 + K2; exists whenever holds is true.
  double K1 = 0.0;
  double K2 = 0.0;
  bool holds = false;
  /// Row (trace row, agent) with the smallest slack under (K1, K2), or the violating row.
  long worst_row = -1;
  long worst_agent = -1;
  long samples = 0;
};

OverallFit fit_overall_envelope(const Trace& trace, const Vector& x_hat, const Vector& mu_hat,
                                double q_p);

}  // namespace apd
