#include "apd/experiment.hpp"
#include "apd/problem_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("apd_test_" + name);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Config, PresetRoundTrip) {
  for (const char* name : {"benchmark", "beta_sweep", "comm_sweep"}) {
    auto c = apd::preset_config(name);
    auto back = apd::config_from_json(apd::config_to_json(c));
    EXPECT_TRUE(back == c) << name;
  }
  EXPECT_THROW(apd::preset_config("nope"), apd::InputError);
}

TEST(Config, DeterministicScheduleRoundTrip) {
  apd::Schedule s;
  s.mode = apd::Schedule::Mode::kDeterministic;
  s.horizon = 50;
  s.window = 10;
  s.compute[2] = apd::TickSet::periodic(4, {1, 3});
  s.primal_comm[{0, 1}] = apd::TickSet::list({0, 7, 9});
  s.dual_comm_default = apd::TickSet::never();
  EXPECT_TRUE(apd::schedule_from_json(apd::schedule_to_json(s)) == s);
}

TEST(Config, RejectsUnknownKeys) {
  auto j = apd::config_to_json(apd::preset_config("benchmark"));
  j["bogus"] = 1;
  EXPECT_THROW(apd::config_from_json(j), apd::InputError);
}

TEST(ProblemIo, RoundTrip) {
  auto p = apd::benchmark_problem(10.0);
  auto q = apd::problem_from_json(apd::problem_to_json(p));
  EXPECT_EQ(apd::problem_to_json(q), apd::problem_to_json(p));
  apd::Vector x = apd::Vector::LinSpaced(10, 1.0, 10.0);
  EXPECT_EQ(q.objective().value(x), p.objective().value(x));

  auto r = apd::random_dominant_quadratic(6, 2, 3);
  auto r2 = apd::problem_from_json(apd::problem_to_json(r));
  EXPECT_EQ(apd::problem_to_json(r2), apd::problem_to_json(r));

  auto bad = apd::problem_to_json(p);
  bad["family"] = "cubic";
  EXPECT_THROW(apd::problem_from_json(bad), apd::InputError);
}

TEST(Verify, BenchmarkReport) {
  std::ostringstream log;
  auto rep = apd::cmd_verify(apd::preset_config("benchmark"), log);
  ASSERT_EQ(rep.items.size(), 5u);
  EXPECT_EQ(rep.items[0].name, "Slater point");
  EXPECT_FALSE(rep.items[0].pass);
  EXPECT_NE(rep.items[0].detail.find("= 15 >= b = 4"), std::string::npos);
  for (std::size_t i = 1; i < rep.items.size(); ++i) EXPECT_TRUE(rep.items[i].pass) << i;
  EXPECT_NEAR(rep.data["beta"].get<double>(), 12.0, 1e-9);
}

TEST(Verify, RejectedStepSize) {
  auto c = apd::preset_config("benchmark");
  c.gamma = 1e-3;
  c.rho = 100.0;
  std::ostringstream log;
  auto rep = apd::cmd_verify(c, log);
  EXPECT_FALSE(rep.items[3].pass);
  EXPECT_FALSE(rep.items[4].pass);
  EXPECT_THROW(apd::resolve_setup(c), apd::StepSizeError);
}

TEST(Solve, CsvIsReproducible) {
  auto dir = scratch("solve");
  auto c = apd::preset_config("benchmark");
  c.ticks = 200;
  c.seeds = {3, 4};
  c.schedule = apd::Schedule::bernoulli(0, 0.5, 0);
  c.output = (dir / "a").string();
  std::ostringstream log;
  apd::cmd_solve(c, log);
  c.output = (dir / "b").string();
  apd::cmd_solve(c, log);
  std::string a3 = slurp(dir / "a_seed3.csv");
  EXPECT_FALSE(a3.empty());
  EXPECT_EQ(a3, slurp(dir / "b_seed3.csv"));
  EXPECT_NE(a3, slurp(dir / "a_seed4.csv"));
  EXPECT_EQ(std::count(a3.begin(), a3.end(), '\n'), 202);
  EXPECT_TRUE(fs::exists(dir / "a_summary.json"));
}

TEST(Solve, AuditsPassOnBenchmark) {
  auto c = apd::preset_config("benchmark");
  c.ticks = 600;
  auto setup = apd::resolve_setup(c);
  auto ref = apd::solve_saddle(setup.problem, setup.dual_box, setup.steps.gamma, setup.steps.rho);
  auto rr = apd::simulate(c, setup, ref, 0, "");
  ASSERT_FALSE(rr.audit.is_null());
  EXPECT_EQ(rr.audit["primal_envelope"]["violations"].get<long>(), 0);
  EXPECT_EQ(rr.audit["dual_one_step"]["violations"].get<long>(), 0);
  EXPECT_TRUE(rr.audit["dual_asymptote"]["holds"].get<bool>());
}

TEST(Stats, TailWindow) {
  apd::Trace t;
  for (int k = 0; k < 10; ++k) {
    apd::TraceRow r;
    r.k = k;
    r.rel_primal_err = k < 8 ? 5.0 : (k == 8 ? 1.0 : 3.0);
    t.rows.push_back(r);
  }
  auto [mean, var] = apd::tail_stats(t, 0.2);
  EXPECT_DOUBLE_EQ(mean, 2.0);
  EXPECT_DOUBLE_EQ(var, 1.0);
}

TEST(Counterexample, CommandWritesReport) {
  auto dir = scratch("ce");
  std::ostringstream log;
  auto rep = apd::cmd_counterexample({0.1, 10.0, 2}, 0, (dir / "ce").string(), log);
  EXPECT_TRUE(fs::exists(dir / "ce_instance.json"));
  EXPECT_TRUE(fs::exists(dir / "ce_counterexample.json"));
  EXPECT_GT(rep["primal_gap"].get<double>(), 10.0);
}
