#pragma once

#include "apd/problem.hpp"
#include "apd/schedule.hpp"
#include "apd/trace.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace apd {

/// Quadratic program min 0.5 x^T Q x + r^T x s.t. A x <= 0 whose Lagrangian
/// minimizers for two nearby multipliers mu1, mu2 lie far apart.
struct CounterexampleInstance {
  long n = 0;
  long m = 0;
  Matrix Q;
  /// Rows are orthonormal eigenvectors of Q.
  Matrix A;
  Vector r;
  Vector mu1;
  Vector mu2;
  double epsilon = 0.0;
  double L = 0.0;
  /// X = [-box_halfwidth, box_halfwidth]^n.
  double box_halfwidth = 0.0;
};

/// Q = V^T diag(lambda) V with lambda log-uniform in [0.1, 0.5] * epsilon / L,
/// V orthogonal from a sign-normalized QR of a Gaussian matrix, A = V, mu1 uniform
/// in [0, epsilon]^n, mu2 = mu1 + 0.9 epsilon e for a unit e >= 0.
CounterexampleInstance build_counterexample(double epsilon, double L, long n, std::uint64_t seed);

/// Validates and completes a hand-specified instance. A nonpositive box_halfwidth
/// is replaced by 1.1 max(|x1|_inf, |x2|_inf) + 1.
CounterexampleInstance counterexample_from_parts(Matrix Q, Matrix A, Vector r, Vector mu1,
                                                 Vector mu2, double epsilon, double L,
                                                 double box_halfwidth = 0.0);

/// -Q^{-1} (r + A^T mu). Throws InputError when the point leaves the instance box.
Vector argmin_lagrangian(const CounterexampleInstance& inst, const Vector& mu);

struct CounterexampleReport {
  double dual_gap = 0.0;     // |mu1 - mu2|_2
  double primal_gap = 0.0;   // |x1 - x2|_2
  double sigma_min = 0.0;    // smallest singular value of Q^{-1} A^T
  double lower_bound = 0.0;  // sigma_min |mu1 - mu2|_2
  double lambda_max = 0.0;
  /// max |sigma_i - 1 / lambda_i| over sorted spectra, relative.
  double sigma_spectrum_error = 0.0;
  /// |A A^T - I|_max.
  double orthonormality_error = 0.0;
};

/// Names the inequality that failed.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks |mu1 - mu2| < epsilon, |x1 - x2| > L and |x1 - x2| >= sigma_min |mu1 - mu2|
/// (relative tolerance 1e-9). Throws VerificationError on failure.
CounterexampleReport verify_counterexample(const CounterexampleInstance& inst);

/// The instance as a ConvexProblem (quadratic family, b = 0).
ConvexProblem counterexample_problem(const CounterexampleInstance& inst, double delta = 0.01);

struct DivergenceDemo {
  Trace run1;  // multipliers frozen at mu1
  Trace run2;  // multipliers frozen at mu2
  double terminal_gap = 0.0;  // |x_own(run1) - x_own(run2)|_2 at the last tick
  double gamma = 0.0;
  /// False when Q is not diagonally dominant and the synchronous schedule was used.
  bool used_given_schedule = true;
};

/// Two frozen-multiplier primal runs in the simulator. The step is 0.9 / max row
/// sum of |Q|; when Q is not diagonally dominant the asynchronous iteration has no
/// convergence guarantee, so the synchronous schedule is substituted.
DivergenceDemo demo_divergence(const CounterexampleInstance& inst, const Schedule& schedule,
                               long ticks = 2000);

}  // namespace apd
