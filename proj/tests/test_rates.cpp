#include "apd/rates.hpp"

#include <gtest/gtest.h>

#include <cmath>

TEST(Rates, PrimalFactor) {
  EXPECT_NEAR(apd::qp(8e-4, 12.0), 0.9904, 1e-12);
  EXPECT_THROW(apd::qp(0.1, 0.0), apd::StepSizeError);
  EXPECT_THROW(apd::qp(0.2, 10.0), apd::StepSizeError);
}

TEST(Rates, DualFactorAndInterval) {
  EXPECT_NEAR(apd::qd(500.0, 0.001), 0.75, 1e-12);
  auto [lo, hi] = apd::rho_interval(0.001);
  EXPECT_NEAR(lo, (3.0 - std::sqrt(3.0)) / 0.003, 1e-9);
  EXPECT_NEAR(hi, (3.0 + std::sqrt(3.0)) / 0.003, 1e-9);
  EXPECT_NEAR(lo, 422.649730810374, 1e-9);
  EXPECT_NEAR(hi, 1577.350269189626, 1e-9);
  EXPECT_TRUE(apd::qd_admissible(1000.0, 0.001));
  EXPECT_FALSE(apd::qd_admissible(400.0, 0.001));
  EXPECT_FALSE(apd::qd_admissible(lo, 0.001));
  EXPECT_NEAR(apd::qd(1000.0, 0.001), 0.0, 1e-12);
}

TEST(Rates, PenaltyTerms) {
  EXPECT_NEAR(apd::penalty_terms(1, 1, 1, 1, 0.5, 1), 3.5, 1e-12);
  EXPECT_NEAR(apd::asynchrony_penalty(1, 1, 1), 2.0, 1e-12);
  EXPECT_NEAR(apd::worst_case_penalty(1, 1, 1, 1), 6.0, 1e-12);
  // Large ops leaves only the asynchrony penalty.
  EXPECT_NEAR(apd::penalty_terms(1, 1, 1, 1, 0.5, 200), 2.0, 1e-12);
}

TEST(Rates, DualEnvelope) {
  EXPECT_NEAR(apd::dual_envelope(1.0, 0.75, 0.1, 0), 0.925, 1e-12);
  EXPECT_THROW(apd::dual_envelope(1.0, 1.0, 0.1, 0), apd::StepSizeError);
  // Tends to p / (1 - q_d).
  EXPECT_NEAR(apd::dual_envelope(1.0, 0.75, 0.1, 500), 0.4, 1e-12);
}

TEST(Rates, BenchmarkConstants) {
  auto p = apd::benchmark_problem();
  auto rc = apd::rate_constants(p, 8e-4, 1000.0, 12.0);
  EXPECT_NEAR(rc.M_gc(0), 10.0, 1e-12);
  EXPECT_NEAR(rc.D_x, 9.0, 1e-12);
  EXPECT_NEAR(rc.q_p, 0.9904, 1e-12);
  EXPECT_NEAR(rc.q_d, 0.0, 1e-12);
  auto M = apd::constraint_gradient_bounds(p);
  EXPECT_EQ(M.size(), 6);
}

TEST(Rates, AdmissibleSteps) {
  auto p = apd::benchmark_problem();
  double gmax = 1.0 / 1203.6;
  auto s = apd::admissible_steps(p, 8e-4, 1000.0, gmax);
  EXPECT_EQ(s.gamma, 8e-4);
  EXPECT_THROW(apd::admissible_steps(p, 1e-3, 1000.0, gmax), apd::StepSizeError);
  EXPECT_THROW(apd::admissible_steps(p, 8e-4, 200.0, gmax), apd::StepSizeError);
}
