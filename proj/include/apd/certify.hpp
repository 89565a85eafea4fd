#pragma once

#include "apd/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace apd {

enum class EnclosureMethod { kIntervalBound, kGridSample };

std::string to_string(EnclosureMethod method);

/// Sampling used when the Hessian admits no closed-form enclosure. Points are a
/// full tensor grid over X x M when grid_points^(n+m) <= max_samples, otherwise
/// max_samples seeded uniform draws plus the centre and the all-lower/all-upper corners.
struct SamplingOptions {
  int grid_points = 5;
  int max_samples = 20000;
  std::uint64_t seed = 0x5eed;
  /// Applied to gamma_bound when the enclosure is sampled rather than certified.
  double safety_factor = 0.9;
};

/// Certified beta-diagonal dominance of grad^2_x L_delta over X x M.
struct DominanceCertificate {
  double beta = 0.0;
  EnclosureMethod method = EnclosureMethod::kIntervalBound;
  /// Point (x, mu) minimizing the dominance margin among those examined.
  Vector witness_x;
  Vector witness_mu;
  /// Row attaining the minimum margin.
  Eigen::Index witness_row = 0;
};

/// Dominance fails somewhere on X x M.
class CertificationError : public std::runtime_error {
 public:
  CertificationError(const std::string& what, Vector x, Vector mu, double margin)
      : std::runtime_error(what), x_(std::move(x)), mu_(std::move(mu)), margin_(margin) {}

  const Vector& witness_x() const { return x_; }
  const Vector& witness_mu() const { return mu_; }
  double margin() const { return margin_; }

 private:
  Vector x_;
  Vector mu_;
  double margin_;
};

DominanceCertificate verify_dominance(const ConvexProblem& p, const DualBox& dual_box,
                                      const SamplingOptions& sampling = {});

/// Upper bound on admissible primal step sizes: 1 / max_i max_{X x M} sum_j |H_ij|.
/// Sampled enclosures are shrunk by the safety factor.
double gamma_bound(const ConvexProblem& p, const DualBox& dual_box,
                   const SamplingOptions& sampling = {});

/// Returns the dual box with radius (h(slater) - h_lower) / min_j (-g_j(slater)).
/// `h_lower` defaults to 0 when h is certified nonnegative on X.
DualBox dual_bound(const ConvexProblem& p, const Vector& slater_point,
                   std::optional<double> h_lower = std::nullopt);

struct SlaterReport {
  bool in_box = false;
  bool strictly_feasible = false;
  Vector g_value;
};

SlaterReport check_slater(const ConvexProblem& p, const Vector& point);

/// For affine constraints: min over X of each g_c (attained at a box corner). Any
/// nonnegative entry rules out a Slater point. Empty for nonaffine constraints.
std::optional<Vector> affine_constraint_minima(const ConvexProblem& p);

struct ContractionMatrices {
  Matrix G;
  Matrix F;
};

/// G_ii = |H_ii|, G_ij = -|H_ij|; F = I - gamma G. Throws StepSizeError unless both
/// are strictly diagonally dominant with positive diagonal.
ContractionMatrices build_G_F(const Matrix& H, double gamma);

/// Cholesky-based positive definiteness test.
bool positive_definite(const Matrix& M);

/// Admissible (gamma, rho) pair with the bounds they were checked against.
struct StepSizes {
  double gamma = 0.0;
  double rho = 0.0;
  double gamma_max = 0.0;
  std::pair<double, double> rho_interval;
};

/// Throws StepSizeError unless 0 < gamma < gamma_max and rho lies strictly inside
/// the dual step interval for p.delta().
StepSizes admissible_steps(const ConvexProblem& p, double gamma, double rho, double gamma_max);

/// Essential neighbourhoods: neighbors[i] lists every j != i whose block enters
/// d L_delta / d x_i somewhere on X x M.
std::vector<std::vector<Eigen::Index>> essential_neighbors(const ConvexProblem& p,
                                                           const DualBox& dual_box,
                                                           const SamplingOptions& sampling = {});

}  // namespace apd
