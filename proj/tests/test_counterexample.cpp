#include "apd/audit.hpp"
#include "apd/certify.hpp"
#include "apd/counterexample.hpp"
#include "apd/rates.hpp"
#include "apd/simulator.hpp"
#include "apd/uzawa.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using apd::Matrix;
using apd::Vector;

apd::CounterexampleInstance hand_instance(double lambda = 0.005, double L = 10.0) {
  Vector mu1 = Vector::Zero(2), mu2(2);
  mu2 << 0.09, 0.0;
  return apd::counterexample_from_parts(lambda * Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                        Vector::Zero(2), mu1, mu2, 0.1, L);
}

}  // namespace

TEST(Counterexample, HandInstance) {
  auto inst = hand_instance();
  Vector x2 = apd::argmin_lagrangian(inst, inst.mu2);
  EXPECT_NEAR(x2(0), -18.0, 1e-12);
  EXPECT_NEAR(x2(1), 0.0, 1e-12);
  auto rep = apd::verify_counterexample(inst);
  EXPECT_NEAR(rep.dual_gap, 0.09, 1e-15);
  EXPECT_NEAR(rep.primal_gap, 18.0, 1e-12);
  EXPECT_NEAR(rep.sigma_min, 200.0, 1e-9);
  EXPECT_NEAR(rep.lower_bound, 18.0, 1e-9);
  EXPECT_GT(rep.primal_gap, inst.L);
}

TEST(Counterexample, ArgminMatchesInnerFixedPoint) {
  auto inst = hand_instance();
  auto p = apd::counterexample_problem(inst);
  auto fp = apd::inner_primal_fixed_point(p, inst.mu2, 0.9 / 0.005);
  ASSERT_TRUE(fp.converged);
  EXPECT_LT((fp.x - apd::argmin_lagrangian(inst, inst.mu2)).cwiseAbs().maxCoeff(), 1e-8);

  auto rot = apd::build_counterexample(0.1, 10.0, 3, 9);
  auto rp = apd::counterexample_problem(rot);
  double lmax = apd::verify_counterexample(rot).lambda_max;
  auto rfp = apd::inner_primal_fixed_point(rp, rot.mu1, 1.0 / lmax);
  ASSERT_TRUE(rfp.converged);
  EXPECT_LT((rfp.x - apd::argmin_lagrangian(rot, rot.mu1)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Counterexample, RejectsBadParameters) {
  EXPECT_THROW(apd::build_counterexample(1.0, 1.0, 2, 0), apd::InputError);
  EXPECT_THROW(apd::build_counterexample(1.0, 0.5, 2, 0), apd::InputError);
  EXPECT_THROW(apd::build_counterexample(0.1, 10.0, 0, 0), apd::InputError);
  // lambda_max = 0.01 is not below epsilon / L.
  EXPECT_THROW(hand_instance(0.01), apd::InputError);
}

TEST(Counterexample, ScalarInstance) {
  auto inst = apd::build_counterexample(0.1, 10.0, 1, 4);
  auto rep = apd::verify_counterexample(inst);
  EXPECT_GT(rep.primal_gap, 10.0);
  EXPECT_NEAR(std::abs(inst.A(0, 0)), 1.0, 1e-15);
}

TEST(Counterexample, RandomSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto inst = apd::build_counterexample(0.05, 100.0, 5, seed);
    apd::CounterexampleReport rep;
    ASSERT_NO_THROW(rep = apd::verify_counterexample(inst)) << seed;
    EXPECT_LT(rep.dual_gap, 0.05);
    EXPECT_GT(rep.primal_gap, 100.0);
    EXPECT_GE(rep.primal_gap, rep.lower_bound * (1.0 - 1e-9));
    EXPECT_LT(rep.sigma_spectrum_error, 1e-9);
    EXPECT_LT(rep.orthonormality_error, 1e-12);
    EXPECT_NEAR(rep.sigma_min, 1.0 / rep.lambda_max, 1e-9 / rep.lambda_max);
  }
}

TEST(Counterexample, SameSeedSameInstance) {
  auto a = apd::build_counterexample(0.1, 10.0, 4, 7);
  auto b = apd::build_counterexample(0.1, 10.0, 4, 7);
  EXPECT_EQ(a.Q, b.Q);
  EXPECT_EQ(a.mu2, b.mu2);
}

TEST(Divergence, HandInstanceGap) {
  auto inst = hand_instance();
  auto demo = apd::demo_divergence(inst, apd::Schedule::bernoulli(2000, 0.5, 1), 2000);
  EXPECT_TRUE(demo.used_given_schedule);
  EXPECT_NEAR(demo.terminal_gap, 18.0, 1e-6);
}

TEST(Divergence, GapScalesInverselyWithLambda) {
  // epsilon / L = 0.02 admits lambda in {0.01, 0.005, 0.001}.
  for (double lambda : {0.01, 0.005, 0.001}) {
    auto inst = hand_instance(lambda, 5.0);
    auto demo = apd::demo_divergence(inst, apd::Schedule::synchronous(2000), 2000);
    EXPECT_NEAR(demo.terminal_gap, 0.09 / lambda, 1e-6 * (0.09 / lambda)) << lambda;
  }
}

TEST(Divergence, RotatedInstanceFallsBackWhenNotDominant) {
  auto inst = apd::build_counterexample(0.1, 10.0, 3, 2);
  auto demo = apd::demo_divergence(inst, apd::Schedule::bernoulli(3000, 0.5, 1), 3000);
  double expect = (apd::argmin_lagrangian(inst, inst.mu1) - apd::argmin_lagrangian(inst, inst.mu2))
                      .norm();
  EXPECT_NEAR(demo.terminal_gap, expect, 1e-3 * expect);
}

// The primal envelope also holds on the quadratic hand instance.
TEST(Divergence, PrimalEnvelopeOnInstance) {
  auto inst = hand_instance();
  auto p = apd::counterexample_problem(inst);
  apd::DualBox m{0.1};
  double gamma = 0.9 / 0.005;
  apd::RunOptions o;
  o.sim.freeze_duals = true;
  o.sim.x0 = Vector::Zero(2);
  o.sim.mu0 = inst.mu2;
  auto tr = apd::run(p, m, apd::Schedule::bernoulli(400, 0.3, 5), gamma, 1.0, 400, o);
  apd::FixedPointCache cache(p, gamma);
  auto rep = apd::primal_envelope(tr, cache, apd::qp(gamma, 0.005));
  EXPECT_EQ(rep.violations, 0);
  EXPECT_LE(rep.max_cycle_ratio, apd::qp(gamma, 0.005) + 1e-9);
}
