#include "apd/certify.hpp"
#include "apd/uzawa.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using apd::Matrix;
using apd::Vector;

apd::ConvexProblem scalar_problem(double delta) {
  return apd::ConvexProblem(
      std::make_shared<apd::Quadratic>(Matrix::Constant(1, 1, 2.0), Vector::Zero(1)),
      std::make_shared<apd::AffineConstraints>(Matrix::Constant(1, 1, 1.0),
                                               Vector::Constant(1, 1.0)),
      apd::Box{Vector::Constant(1, -2.0), Vector::Constant(1, 2.0)}, delta);
}

// h = 0.5 |x - (2, 2)|^2, g = x1 + x2 - 1. With mu > 0 the regularized saddle
// satisfies g(x) = delta mu and x = (2, 2) - mu (1, 1), so mu = 3 / (2 + delta).
apd::ConvexProblem shifted_qp(double delta) {
  return apd::ConvexProblem(
      std::make_shared<apd::Quadratic>(Matrix::Identity(2, 2), Vector::Constant(2, -2.0)),
      std::make_shared<apd::AffineConstraints>(Matrix::Ones(1, 2), Vector::Ones(1)),
      apd::Box{Vector::Constant(2, -5.0), Vector::Constant(2, 5.0)}, delta);
}

}  // namespace

TEST(UzawaStep, HandValues) {
  auto p = scalar_problem(0.1);
  apd::DualBox m{4.5};
  apd::SyncIterate it{Vector::Constant(1, 1.0), Vector::Zero(1), 0};
  auto next = apd::uzawa_step(p, m, it, 0.1, 0.1);
  EXPECT_NEAR(next.x(0), 0.8, 1e-12);
  EXPECT_NEAR(next.mu(0), 0.0, 1e-12);
  EXPECT_EQ(next.k, 1);

  it.x(0) = -2.0;
  next = apd::uzawa_step(p, m, it, 0.1, 0.1);
  EXPECT_NEAR(next.x(0), -1.6, 1e-12);
}

TEST(UzawaStep, JacobiOrderReadsOldIterate) {
  auto p = scalar_problem(0.1);
  apd::DualBox m{4.5};
  apd::SyncIterate it{Vector::Constant(1, 2.0), Vector::Constant(1, 1.0), 0};
  auto next = apd::uzawa_step(p, m, it, 0.1, 0.5);
  // x+ = 2 - 0.1 (4 + 1); mu+ = 1 + 0.5 (g(2) - 0.1) uses the old x = 2.
  EXPECT_NEAR(next.x(0), 1.5, 1e-12);
  EXPECT_NEAR(next.mu(0), 1.45, 1e-12);
}

TEST(SolveSaddle, ScalarProblem) {
  auto p = scalar_problem(0.1);
  auto r = apd::solve_saddle(p, apd::DualBox{4.5}, 0.1, 0.1);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 0.0, 1e-9);
  EXPECT_NEAR(r.mu(0), 0.0, 1e-9);
}

TEST(SolveSaddle, LargerDeltaShrinksMultiplier) {
  double prev = 1e300;
  for (double delta : {0.1, 0.5, 1.0}) {
    auto p = shifted_qp(delta);
    // Small enough for the coupled synchronous iteration to converge.
    double rho = 0.2;
    auto r = apd::solve_saddle(p, apd::DualBox{5.0}, 0.5, rho);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.mu(0), 3.0 / (2.0 + delta), 1e-8);
    EXPECT_LT(r.mu(0), prev);
    prev = r.mu(0);
    auto res = apd::saddle_residual(p, apd::DualBox{5.0}, r.x, r.mu, 0.5, rho);
    EXPECT_LT(res.primal, 1e-9);
    EXPECT_LT(res.dual, 1e-9);
  }
}

TEST(SolveSaddle, BenchmarkReference) {
  auto p = apd::benchmark_problem();
  apd::DualBox m{apd::kBenchmarkDualRadius};
  double gamma = 0.9 * apd::gamma_bound(p, m);
  auto r = apd::solve_saddle(p, m, gamma, 1.0 / p.delta());
  ASSERT_TRUE(r.converged);
  EXPECT_TRUE(p.box().contains(r.x));
  EXPECT_TRUE(m.contains(r.mu));
  auto res = apd::saddle_residual(p, m, r.x, r.mu, gamma, 1.0 / p.delta());
  EXPECT_LT(res.primal, 1e-9);
  EXPECT_LT(res.dual, 1e-9);
}

TEST(InnerFixedPoint, ScalarAtUnitMultiplier) {
  auto p = scalar_problem(0.1);
  auto fp = apd::inner_primal_fixed_point(p, Vector::Constant(1, 1.0), 0.1);
  ASSERT_TRUE(fp.converged);
  EXPECT_NEAR(fp.x(0), -0.5, 1e-12);
  // beta = 2, q_p = 1 - 0.1 * 2.
  EXPECT_LE(fp.max_contraction, 0.8 + 1e-9);
}

TEST(InnerFixedPoint, BenchmarkContractionWithinQp) {
  auto p = apd::benchmark_problem();
  apd::DualBox m{apd::kBenchmarkDualRadius};
  double gamma = 8e-4;
  Vector mu = Vector::Constant(6, 2.0);
  Vector x0 = Vector::Constant(10, 10.0);
  auto fp = apd::inner_primal_fixed_point(p, mu, gamma, 1e-13, 10'000'000, &x0);
  ASSERT_TRUE(fp.converged);
  EXPECT_LE(fp.max_contraction, 1.0 - gamma * 12.0 + 1e-9);
}
