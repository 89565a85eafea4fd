#include "apd/certify.hpp"
#include "apd/simulator.hpp"
#include "apd/uzawa.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace {

using apd::Matrix;
using apd::Vector;

// h = 0.5 x^T Q x with Q = [[2, .5], [.5, 2]], g = x1 + x2 - 1, X = [-2, 2]^2, delta = 0.5.
apd::ConvexProblem toy_qp() {
  Matrix Q(2, 2);
  Q << 2.0, 0.5, 0.5, 2.0;
  return apd::ConvexProblem(
      std::make_shared<apd::Quadratic>(Q, Vector::Zero(2)),
      std::make_shared<apd::AffineConstraints>(Matrix::Ones(1, 2), Vector::Ones(1)),
      apd::Box{Vector::Constant(2, -2.0), Vector::Constant(2, 2.0)}, 0.5);
}

apd::Schedule toy_schedule() {
  apd::Schedule s;
  s.mode = apd::Schedule::Mode::kDeterministic;
  s.horizon = 5;
  s.window = 5;
  s.compute[1] = apd::TickSet::list({1, 3});
  s.primal_comm[{0, 1}] = apd::TickSet::list({0, 2, 3});
  s.primal_comm[{1, 0}] = apd::TickSet::list({2, 4});
  s.dual_comm[{0, 0}] = apd::TickSet::list({0, 2});
  s.dual_comm[{1, 0}] = apd::TickSet::list({1, 3});
  return s;
}

apd::SimOptions toy_options() {
  apd::SimOptions o;
  o.x0 = Vector::Ones(2);
  o.mu0 = Vector::Zero(1);
  return o;
}

std::string csv_of(const apd::Trace& t) {
  std::ostringstream os;
  apd::write_csv(os, t);
  return os.str();
}

}  // namespace

// Expected values computed by hand with gamma = 0.25, rho = 1:
//  k | x_1          | x_2          | mu | t
//  0 | 1            | 1            | 0  | 0
//  1 | 0.375        | 1            | 0  | 0   agent 1 steps with grad 2.5
//  2 | 0.0625       | 0.375        | 1  | 1   dual saw (1, 1): mu = 0 + (2 - 1) = 1
//  3 | -0.265625    | 0.375        | 1  | 1
//  4 | -0.4296875   | -0.029296875 | 0  | 2   dual saw (0.0625, 0.375): 1 - 1.0625 -> 0
//  5 | -0.211181640625 | -0.029296875 | 0 | 2
TEST(Simulator, HandTable) {
  apd::World w(toy_qp(), apd::DualBox{4.0}, toy_schedule(), 0.25, 1.0, toy_options());
  const double x1[] = {1.0, 0.375, 0.0625, -0.265625, -0.4296875, -0.211181640625};
  const double x2[] = {1.0, 1.0, 0.375, 0.375, -0.029296875, -0.029296875};
  const double mu[] = {0, 0, 1, 1, 0, 0};
  const long t[] = {0, 0, 1, 1, 2, 2};
  for (int k = 0; k <= 5; ++k) {
    SCOPED_TRACE(k);
    ASSERT_EQ(w.k(), k);
    Vector own = w.own_blocks();
    EXPECT_EQ(own(0), x1[k]);
    EXPECT_EQ(own(1), x2[k]);
    EXPECT_EQ(w.primal_agents()[0].mu_local(0), mu[k]);
    EXPECT_EQ(w.primal_agents()[1].mu_local(0), mu[k]);
    EXPECT_EQ(w.stamp()[0], t[k]);
    EXPECT_EQ(w.ops(), 0);
    if (k < 5) w.advance();
  }
  // Agent 2's view of block 1 at k = 3 came through the tick-3 link.
  ASSERT_EQ(w.dual_updates().size(), 2u);
  EXPECT_EQ(w.dual_updates()[0].k, 1);
  EXPECT_EQ(w.dual_updates()[0].mu_after, 1.0);
  EXPECT_EQ(w.dual_updates()[1].k, 3);
  EXPECT_EQ(w.dual_updates()[1].mu_before, 1.0);
  EXPECT_EQ(w.dual_updates()[1].mu_after, 0.0);
  EXPECT_EQ(w.dual_updates()[1].snapshot(0), 0.0625);
  EXPECT_EQ(w.dual_updates()[1].snapshot(1), 0.375);
  // One full cycle completed under each of the first two stamps.
  ASSERT_EQ(w.ops_increments().size(), 2u);
  EXPECT_EQ(w.ops_increments()[0].k, 2);
  EXPECT_EQ(w.ops_increments()[0].epoch, 0);
  EXPECT_EQ(w.ops_increments()[1].k, 4);
  EXPECT_EQ(w.ops_increments()[1].epoch, 1);
  EXPECT_EQ(w.epoch(), 2);
  EXPECT_EQ(w.total_discards(), 0);
}

TEST(OpsCount, StaggeredUpdates) {
  using E = apd::OpsEvent;
  std::vector<E> ev{{0, E::Kind::kUpdate, 0},
                    {1, E::Kind::kUpdate, 1},
                    {2, E::Kind::kDelivery, 0, 1},
                    {2, E::Kind::kDelivery, 1, 0}};
  auto ops = apd::ops_count(ev, {{1}, {0}});
  ASSERT_EQ(ops.size(), 3u);
  EXPECT_EQ(ops[0], 0);
  EXPECT_EQ(ops[1], 0);
  EXPECT_EQ(ops[2], 1);
}

TEST(OpsCount, DeliveryBeforeUpdateDoesNotCount) {
  using E = apd::OpsEvent;
  std::vector<E> ev{{0, E::Kind::kUpdate, 0},
                    {1, E::Kind::kDelivery, 0, 1},
                    {1, E::Kind::kDelivery, 1, 0},
                    {2, E::Kind::kUpdate, 1},
                    {3, E::Kind::kDelivery, 1, 0},
                    {4, E::Kind::kStampChange, 0}};
  auto ops = apd::ops_count(ev, {{1}, {0}});
  ASSERT_EQ(ops.size(), 5u);
  EXPECT_EQ(ops[1], 0);  // agent 1 has not updated yet
  EXPECT_EQ(ops[3], 1);
  EXPECT_EQ(ops[4], 0);
}

TEST(Ops, FullCommunicationCountsTicks) {
  auto p = toy_qp();
  apd::RunOptions o;
  o.sim = toy_options();
  o.sim.freeze_duals = true;
  auto tr = apd::run(p, apd::DualBox{4.0}, apd::Schedule::synchronous(20), 0.25, 1.0, 20, o);
  for (const auto& row : tr.rows) EXPECT_EQ(row.ops, row.k);
}

TEST(Ops, BroadcastResetsCount) {
  auto p = toy_qp();
  apd::Schedule s;
  s.mode = apd::Schedule::Mode::kDeterministic;
  s.horizon = 8;
  s.window = 8;
  s.dual_comm_default = apd::TickSet::list({4});
  auto tr = apd::run(p, apd::DualBox{4.0}, s, 0.25, 1.0, 8, apd::RunOptions{toy_options()});
  EXPECT_EQ(tr.rows[4].ops, 4);
  EXPECT_EQ(tr.rows[5].ops, 0);
  EXPECT_EQ(tr.rows[5].t[0], 1);
  EXPECT_EQ(tr.rows[6].ops, 1);
}

TEST(Absorb, StampRules) {
  apd::PrimalAgentState a;
  a.index = 0;
  a.x_local = Vector::Zero(3);
  a.t_stamp = {1, 2};
  a.entry_epoch.assign(3, 0);
  a.entry_version.assign(3, 0);
  apd::MessageEvent msg;
  msg.from = 2;
  msg.payload = 7.0;
  msg.stamp = {1, 2};
  auto b = apd::absorb_primal_message(a, msg);
  EXPECT_EQ(b.x_local(2), 7.0);
  EXPECT_EQ(b.discards, 0);

  msg.stamp = {1, 1};
  b = apd::absorb_primal_message(a, msg);
  EXPECT_EQ(b.x_local(2), 0.0);
  EXPECT_EQ(b.discards, 1);

  msg.stamp = {1, 3};
  EXPECT_THROW(apd::absorb_primal_message(a, msg), std::logic_error);

  msg.stamp = {1, 2};
  msg.from = 0;
  b = apd::absorb_primal_message(a, msg);
  EXPECT_EQ(b.x_local(0), 0.0);
}

TEST(DualGate, UpdateAndClamp) {
  // g(x) = x1 + x2 - 1 with snapshot (1, 1) gives g = 1.
  auto p = toy_qp().with_delta(0.1);
  apd::DualAgentState d;
  d.index = 0;
  d.mu_own = 0.0;
  d.x_snapshot = Vector::Ones(2);
  d.fresh = {1, 1};
  d.stamp_seen = {0};
  auto up = apd::dual_gate_and_update(d, p, apd::DualBox{4.5}, 0.5);
  EXPECT_NEAR(up.mu_own, 0.5, 1e-15);
  EXPECT_EQ(up.t_c, 1);
  EXPECT_EQ(up.fresh, (std::vector<long>{0, 0}));

  d.mu_own = 4.4;
  up = apd::dual_gate_and_update(d, p, apd::DualBox{4.5}, 0.5);
  EXPECT_EQ(up.mu_own, 4.5);

  d.fresh = {1, 0};
  up = apd::dual_gate_and_update(d, p, apd::DualBox{4.5}, 0.5);
  EXPECT_EQ(up.mu_own, 4.4);
  EXPECT_EQ(up.t_c, 0);
}

TEST(Simulator, MatchesSynchronousUzawa) {
  auto p = apd::benchmark_problem();
  apd::DualBox m{apd::kBenchmarkDualRadius};
  double gamma = 0.9 * apd::gamma_bound(p, m), rho = 1.0 / p.delta();
  const long ticks = 500;
  apd::RunOptions o;
  o.sim.record_locals = false;
  auto tr = apd::run(p, m, apd::Schedule::synchronous(ticks), gamma, rho, ticks, o);
  apd::SyncIterate it{p.box().midpoint(), Vector::Zero(6), 0};
  for (long k = 0; k <= ticks; ++k) {
    ASSERT_EQ((tr.rows[k].x_own - it.x).cwiseAbs().maxCoeff(), 0.0) << k;
    ASSERT_EQ((tr.rows[k].mu - it.mu).cwiseAbs().maxCoeff(), 0.0) << k;
    it = apd::uzawa_step(p, m, it, gamma, rho);
  }
}

TEST(Simulator, DeterministicPerSeed) {
  auto p = apd::benchmark_problem();
  apd::DualBox m{apd::kBenchmarkDualRadius};
  auto s = apd::Schedule::bernoulli(300, 0.5, 42);
  apd::RunOptions o;
  o.seed = 42;
  auto a = apd::run(p, m, s, 8e-4, 1000.0, 300, o);
  auto b = apd::run(p, m, s, 8e-4, 1000.0, 300, o);
  EXPECT_EQ(csv_of(a), csv_of(b));
  auto s2 = apd::Schedule::bernoulli(300, 0.5, 43);
  o.seed = 43;
  auto c = apd::run(p, m, s2, 8e-4, 1000.0, 300, o);
  EXPECT_NE(csv_of(a), csv_of(c));
}

TEST(Simulator, BlocksStayFrozenOffComputeTicks) {
  auto p = toy_qp();
  apd::Schedule s;
  s.mode = apd::Schedule::Mode::kDeterministic;
  s.horizon = 30;
  s.window = 30;
  s.compute[1] = apd::TickSet::list({10, 20});
  apd::RunOptions o{toy_options()};
  auto tr = apd::run(p, apd::DualBox{4.0}, s, 0.25, 1.0, 30, o);
  for (long k = 1; k <= 30; ++k) {
    bool computed = (k - 1 == 10) || (k - 1 == 20);
    if (!computed) EXPECT_EQ(tr.rows[k].x_own(1), tr.rows[k - 1].x_own(1)) << k;
  }
}

TEST(Simulator, TraceShape) {
  auto p = toy_qp();
  auto tr = apd::run(p, apd::DualBox{4.0}, apd::Schedule::synchronous(7), 0.25, 1.0, 7,
                     apd::RunOptions{toy_options()});
  ASSERT_EQ(tr.rows.size(), 8u);
  EXPECT_EQ(tr.rows[0].x_local.cols(), 2);
  auto zero = apd::run(p, apd::DualBox{4.0}, apd::Schedule::synchronous(0), 0.25, 1.0, 0,
                       apd::RunOptions{toy_options()});
  EXPECT_EQ(zero.rows.size(), 1u);
}

TEST(Simulator, RejectsBadSchedule) {
  auto s = toy_schedule();
  s.dual_comm[{1, 0}] = apd::TickSet::never();
  EXPECT_THROW(apd::World(toy_qp(), apd::DualBox{4.0}, s, 0.25, 1.0, toy_options()),
               apd::InputError);
  auto b = apd::Schedule::bernoulli(10, 0.0, 1);
  EXPECT_THROW(apd::World(toy_qp(), apd::DualBox{4.0}, b, 0.25, 1.0, toy_options()),
               apd::InputError);
}

TEST(Trace, CsvSchema) {
  auto h = apd::csv_header(2);
  std::vector<std::string> want{"k", "seed", "comm_prob", "beta_scale", "ops", "t_1", "t_2",
                                "rel_primal_err", "dual_err_sq_1", "dual_err_sq_2",
                                "constraint_violation_max", "discards"};
  EXPECT_EQ(h, want);
  auto tr = apd::run(toy_qp(), apd::DualBox{4.0}, apd::Schedule::synchronous(3), 0.25, 1.0, 3,
                     apd::RunOptions{toy_options()});
  std::string csv = csv_of(tr);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(apd::format_double(0.1), "0.1");
}
