#include "apd/experiment.hpp"

#include "apd/problem_io.hpp"
#include "apd/simulator.hpp"
#include "apd/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <set>
#include <thread>

namespace apd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON conversion

namespace {

json tickset_to_json(const TickSet& s) {
  const auto& rep = s.rep();
  if (std::holds_alternative<TickSet::Every>(rep)) return "all";
  if (std::holds_alternative<TickSet::Never>(rep)) return "never";
  if (auto* p = std::get_if<TickSet::Periodic>(&rep))
    return {{"period", p->period}, {"offsets", p->offsets}};
  return {{"ticks", std::get<TickSet::Explicit>(rep).ticks}};
}

TickSet tickset_from_json(const json& j) {
  if (j.is_string()) {
    if (j == "all") return TickSet::every();
    if (j == "never") return TickSet::never();
    throw InputError("tick set: expected \"all\", \"never\" or an object");
  }
  require(j.is_object(), "tick set: expected a string or an object");
  if (j.contains("period"))
    return TickSet::periodic(j.at("period").get<long>(), j.at("offsets").get<std::vector<long>>());
  if (j.contains("ticks")) return TickSet::list(j.at("ticks").get<std::vector<long>>());
  throw InputError("tick set: object needs \"period\"/\"offsets\" or \"ticks\"");
}

json pair_overrides_to_json(const std::map<std::pair<long, long>, TickSet>& m) {
  json out = json::array();
  for (const auto& [key, set] : m)
    out.push_back({{"from", key.first}, {"to", key.second}, {"set", tickset_to_json(set)}});
  return out;
}

std::map<std::pair<long, long>, TickSet> pair_overrides_from_json(const json& j) {
  std::map<std::pair<long, long>, TickSet> out;
  for (const json& e : j)
    out[{e.at("from").get<long>(), e.at("to").get<long>()}] = tickset_from_json(e.at("set"));
  return out;
}

json optional_step(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }

std::optional<double> step_from_json(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const json& v = j.at(key);
  if (v.is_string()) {
    if (v == "auto") return std::nullopt;
    throw InputError(std::string(key) + ": expected a number or \"auto\"");
  }
  return v.get<double>();
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw InputError(where + ": unknown key '" + key + "'");
}

}  // namespace

json schedule_to_json(const Schedule& s) {
  json out;
  out["mode"] = s.mode == Schedule::Mode::kBernoulli ? "bernoulli" : "deterministic";
  out["horizon"] = s.horizon;
  out["window"] = s.window;
  out["seed"] = s.seed;
  out["compute_prob"] = s.compute_prob;
  out["comm_prob"] = s.comm_prob;
  out["dual_comm_prob"] = s.dual_comm_prob;
  out["compute"] = tickset_to_json(s.compute_default);
  json comp = json::array();
  for (const auto& [agent, set] : s.compute)
    comp.push_back({{"agent", agent}, {"set", tickset_to_json(set)}});
  out["compute_overrides"] = comp;
  out["primal_comm"] = tickset_to_json(s.primal_comm_default);
  out["primal_comm_overrides"] = pair_overrides_to_json(s.primal_comm);
  out["dual_comm"] = tickset_to_json(s.dual_comm_default);
  out["dual_comm_overrides"] = pair_overrides_to_json(s.dual_comm);
  return out;
}

Schedule schedule_from_json(const json& j) {
  require(j.is_object(), "schedule: expected an object");
  check_keys(j,
             {"mode", "horizon", "window", "seed", "compute_prob", "comm_prob", "dual_comm_prob",
              "compute", "compute_overrides", "primal_comm", "primal_comm_overrides", "dual_comm",
              "dual_comm_overrides"},
             "schedule");
  Schedule s;
  std::string mode = j.value("mode", std::string("bernoulli"));
  if (mode == "bernoulli")
    s.mode = Schedule::Mode::kBernoulli;
  else if (mode == "deterministic")
    s.mode = Schedule::Mode::kDeterministic;
  else
    throw InputError("schedule: unknown mode '" + mode + "'");
  s.horizon = j.value("horizon", 0L);
  s.window = j.value("window", 100L);
  s.seed = j.value("seed", std::uint64_t{0});
  s.compute_prob = j.value("compute_prob", 1.0);
  s.comm_prob = j.value("comm_prob", 1.0);
  s.dual_comm_prob = j.value("dual_comm_prob", 1.0);
  if (j.contains("compute")) s.compute_default = tickset_from_json(j.at("compute"));
  if (j.contains("compute_overrides"))
    for (const json& e : j.at("compute_overrides"))
      s.compute[e.at("agent").get<long>()] = tickset_from_json(e.at("set"));
  if (j.contains("primal_comm")) s.primal_comm_default = tickset_from_json(j.at("primal_comm"));
  if (j.contains("primal_comm_overrides"))
    s.primal_comm = pair_overrides_from_json(j.at("primal_comm_overrides"));
  if (j.contains("dual_comm")) s.dual_comm_default = tickset_from_json(j.at("dual_comm"));
  if (j.contains("dual_comm_overrides"))
    s.dual_comm = pair_overrides_from_json(j.at("dual_comm_overrides"));
  return s;
}

ExperimentConfig config_from_json(const json& j) {
  require(j.is_object(), "config: expected an object");
  check_keys(j,
             {"preset", "problem", "problem_file", "dual_radius_override", "slater_point",
              "h_lower", "gamma", "rho", "delta", "beta_scale", "schedule", "sweep", "seeds",
              "ticks", "output", "x0", "mu0", "tail_fraction", "audit", "counterexample"},
             "config");
  try {
    ExperimentConfig c;
    int sources = j.contains("preset") + j.contains("problem") + j.contains("problem_file");
    require(sources <= 1, "config: give only one of preset, problem, problem_file");
    c.preset = j.value("preset", sources == 0 ? std::string("benchmark") : std::string());
    if (j.contains("problem")) c.problem = j.at("problem");
    c.problem_file = j.value("problem_file", std::string());
    if (!c.preset.empty() && c.preset != "benchmark")
      throw InputError("config: unknown problem preset '" + c.preset + "'");

    if (j.contains("dual_radius_override"))
      c.dual_radius_override = j.at("dual_radius_override").get<double>();
    if (j.contains("slater_point"))
      c.slater_point = j.at("slater_point").get<std::vector<double>>();
    if (j.contains("h_lower")) c.h_lower = j.at("h_lower").get<double>();
    c.gamma = step_from_json(j, "gamma");
    c.rho = step_from_json(j, "rho");
    c.delta = step_from_json(j, "delta");
    c.beta_scale = j.value("beta_scale", 1.0);
    if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      check_keys(s, {"parameter", "values"}, "sweep");
      c.sweep.parameter = s.at("parameter").get<std::string>();
      c.sweep.values = s.at("values").get<std::vector<double>>();
      static const std::set<std::string> kParams{"beta_scale", "comm_prob", "rho", "gamma"};
      require(kParams.count(c.sweep.parameter) > 0,
              "sweep: parameter must be beta_scale, comm_prob, rho or gamma");
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.ticks = j.value("ticks", 1000L);
    c.output = j.value("output", std::string("apd_out"));
    if (j.contains("x0")) c.x0 = j.at("x0").get<std::vector<double>>();
    if (j.contains("mu0")) c.mu0 = j.at("mu0").get<std::vector<double>>();
    c.tail_fraction = j.value("tail_fraction", 0.2);
    c.audit = j.value("audit", true);
    if (j.contains("counterexample")) {
      const json& ce = j.at("counterexample");
      check_keys(ce, {"epsilon", "L", "n"}, "counterexample");
      c.counterexample.epsilon = ce.value("epsilon", 0.1);
      c.counterexample.L = ce.value("L", 10.0);
      c.counterexample.n = ce.value("n", 2L);
    }
    require(c.ticks >= 0, "config: ticks must be nonnegative");
    require(!c.seeds.empty(), "config: seeds must be nonempty");
    require(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0,
            "config: tail_fraction must be in (0, 1]");
    require(c.beta_scale > 0.0, "config: beta_scale must be positive");
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

json config_to_json(const ExperimentConfig& c) {
  json out;
  if (!c.preset.empty()) out["preset"] = c.preset;
  if (!c.problem.is_null()) out["problem"] = c.problem;
  if (!c.problem_file.empty()) out["problem_file"] = c.problem_file;
  if (c.dual_radius_override) out["dual_radius_override"] = *c.dual_radius_override;
  if (c.slater_point) out["slater_point"] = *c.slater_point;
  if (c.h_lower) out["h_lower"] = *c.h_lower;
  out["gamma"] = optional_step(c.gamma);
  out["rho"] = optional_step(c.rho);
  out["delta"] = optional_step(c.delta);
  out["beta_scale"] = c.beta_scale;
  out["schedule"] = schedule_to_json(c.schedule);
  if (!c.sweep.parameter.empty())
    out["sweep"] = {{"parameter", c.sweep.parameter}, {"values", c.sweep.values}};
  out["seeds"] = c.seeds;
  out["ticks"] = c.ticks;
  out["output"] = c.output;
  if (c.x0) out["x0"] = *c.x0;
  if (c.mu0) out["mu0"] = *c.mu0;
  out["tail_fraction"] = c.tail_fraction;
  out["audit"] = c.audit;
  out["counterexample"] = {{"epsilon", c.counterexample.epsilon},
                           {"L", c.counterexample.L},
                           {"n", c.counterexample.n}};
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = "benchmark";
  c.dual_radius_override = kBenchmarkDualRadius;
  c.schedule = Schedule::bernoulli(0, 1.0, 0);
  if (name == "benchmark") {
    c.ticks = 3000;
    c.output = "benchmark";
    return c;
  }
  if (name == "beta_sweep") {
    c.sweep = {"beta_scale", {0.9, 1.0, 10.0, 100.0}};
    c.ticks = 40000;
    c.audit = false;
    c.output = "beta_sweep";
    return c;
  }
  if (name == "comm_sweep") {
    c.sweep = {"comm_prob", {1.0, 0.5, 0.1}};
    c.seeds.clear();
    for (std::uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);
    c.ticks = 600;
    c.audit = false;
    c.output = "comm_sweep";
    return c;
  }
  throw InputError("unknown preset '" + name + "' (benchmark, beta_sweep, comm_sweep)");
}

// ---------------------------------------------------------------------------
// Setup

ConvexProblem base_problem(const ExperimentConfig& c) {
  ConvexProblem p = [&] {
    if (!c.problem.is_null()) return problem_from_json(c.problem);
    if (!c.problem_file.empty()) return load_problem(c.problem_file);
    if (c.preset == "benchmark") return benchmark_problem(1.0);
    throw InputError("config: no problem source");
  }();
  if (c.delta) p = p.with_delta(*c.delta);
  return p;
}

namespace {

struct ProblemAndBox {
  ConvexProblem problem;
  DualBox box;
  std::string note;
};

ProblemAndBox resolve_problem(const ExperimentConfig& c) {
  ConvexProblem p = base_problem(c);
  if (c.beta_scale != 1.0) p = p.with_scaled_objective(c.beta_scale);

  DualBox box;
  std::string note;
  if (c.dual_radius_override) {
    require(*c.dual_radius_override >= 0.0, "dual_radius_override must be nonnegative");
    box.radius = *c.dual_radius_override;
    box.provenance = DualBox::Provenance::kUserSupplied;
    note = "user-supplied radius; not derived from a Slater point";
  } else if (c.slater_point) {
    Vector s = Eigen::Map<const Vector>(c.slater_point->data(), c.slater_point->size());
    require(s.size() == p.n(), "slater_point: dimension mismatch");
    box = dual_bound(p, s, c.h_lower);
    note = "radius from the Slater point";
  } else {
    throw InputError("no dual set: supply slater_point or dual_radius_override");
  }
  return {std::move(p), box, std::move(note)};
}

}  // namespace

Setup resolve_setup(const ExperimentConfig& c, std::optional<double> gamma_override) {
  auto [p, box, note] = resolve_problem(c);
  DominanceCertificate cert = verify_dominance(p, box);
  double gmax = gamma_bound(p, box);
  double gamma = gamma_override ? *gamma_override : c.gamma.value_or(0.9 * gmax);
  double rho = c.rho.value_or(1.0 / p.delta());
  StepSizes steps = admissible_steps(p, gamma, rho, gmax);
  RateConstants rates = rate_constants(p, gamma, rho, cert.beta);
  return Setup{std::move(p), box, note, cert, gmax, steps, rates, c.beta_scale};
}

// ---------------------------------------------------------------------------
// Runs

std::pair<double, double> tail_stats(const Trace& trace, double tail_fraction) {
  if (trace.rows.empty()) return {0.0, 0.0};
  const long total = static_cast<long>(trace.rows.size());
  long count = std::max(1L, static_cast<long>(std::ceil(tail_fraction * total)));
  count = std::min(count, total);
  double mean = 0.0;
  for (long r = total - count; r < total; ++r) mean += trace.rows[r].rel_primal_err;
  mean /= count;
  double var = 0.0;
  for (long r = total - count; r < total; ++r) {
    double d = trace.rows[r].rel_primal_err - mean;
    var += d * d;
  }
  return {mean, var / count};
}

namespace {

json vec_json(const Vector& v) { return vector_to_json(v); }

std::optional<Vector> to_vector(const std::optional<std::vector<double>>& v) {
  if (!v) return std::nullopt;
  return Eigen::Map<const Vector>(v->data(), v->size());
}

json audit_trace(const ExperimentConfig& c, const Setup& setup, const SaddleResult& ref,
                 const Trace& trace, std::vector<ExtraColumn>& extra) {
  const ConvexProblem& p = setup.problem;
  const RateConstants& k = setup.rates;
  FixedPointCache x_star(p, setup.steps.gamma);
  PrimalEnvelopeReport primal = primal_envelope(trace, x_star, k.q_p);
  DualStepReport step = dual_one_step(trace, x_star, ref.mu, setup.steps.rho, p.delta(), k.q_p,
                                      k.M_gc, k.D_x);
  double L = step.max_L_x;
  for (double l : primal.epoch_L) L = std::max(L, l);
  Vector mu0 = to_vector(c.mu0).value_or(Vector::Zero(p.m()));
  DualAsymptoteReport asym =
      dual_asymptote(trace, mu0, ref.mu, setup.steps.rho, p.delta(), k.M_gc, k.D_x, L);
  OverallFit fit = fit_overall_envelope(trace, ref.x, ref.mu, k.q_p);

  extra.push_back({"primal_bound", primal.bound});
  extra.push_back({"primal_observed", primal.observed});

  json out;
  out["constants"] = {{"q_p", k.q_p},   {"q_d", k.q_d},   {"M_gc", vec_json(k.M_gc)},
                      {"D_x", k.D_x},   {"L_x", L},       {"beta", setup.certificate.beta},
                      {"gamma", setup.steps.gamma},       {"rho", setup.steps.rho}};
  out["primal_envelope"] = {{"violations", primal.violations},
                            {"worst_excess", primal.worst_excess},
                            {"max_cycle_ratio", primal.max_cycle_ratio},
                            {"cycles", primal.cycles},
                            {"epochs", primal.epoch_L.size()},
                            {"holds", primal.violations == 0 && primal.max_cycle_ratio <= k.q_p}};
  out["dual_one_step"] = {{"updates", step.checks.size()},
                          {"violations", step.violations},
                          {"worst_excess", step.checks.empty() ? 0.0 : step.worst_excess},
                          {"holds", step.violations == 0}};
  out["dual_asymptote"] = {{"p_max", vec_json(asym.p_max)},
                           {"asymptote", vec_json(asym.asymptote)},
                           {"limsup", vec_json(asym.limsup)},
                           {"envelope_violations", asym.envelope_violations},
                           {"holds", asym.holds}};
  out["overall_fit"] = {{"K1_ls", fit.K1_ls}, {"K2_ls", fit.K2_ls}, {"K1", fit.K1},
                        {"K2", fit.K2},       {"holds", fit.holds}, {"worst_row", fit.worst_row},
                        {"worst_agent", fit.worst_agent},           {"samples", fit.samples}};
  return out;
}

}  // namespace

RunResult simulate(const ExperimentConfig& c, const Setup& setup, const SaddleResult& reference,
                   std::uint64_t seed, const std::string& csv_path) {
  Schedule s = c.schedule;
  s.seed = seed;
  if (s.horizon <= 0) s.horizon = c.ticks;
  RunOptions opts;
  opts.sim.x0 = to_vector(c.x0);
  opts.sim.mu0 = to_vector(c.mu0);
  opts.sim.record_locals = c.audit;
  opts.seed = seed;
  opts.comm_prob = s.mode == Schedule::Mode::kBernoulli ? s.comm_prob : 1.0;
  opts.beta_scale = setup.beta_scale;

  RunResult res;
  res.seed = seed;
  res.comm_prob = opts.comm_prob;
  res.csv_path = csv_path;
  res.trace = run(setup.problem, setup.dual_box, s, setup.steps.gamma, setup.steps.rho, c.ticks,
                  opts, &reference.x, &reference.mu);
  for (const TraceRow& row : res.trace.rows)
    if (row.rel_primal_err < 1e-3) {
      res.iterations_to_1e3 = row.k;
      break;
    }
  res.final_rel_err = res.trace.rows.back().rel_primal_err;
  std::tie(res.tail_mean, res.tail_var) = tail_stats(res.trace, c.tail_fraction);

  std::vector<ExtraColumn> extra;
  if (c.audit) res.audit = audit_trace(c, setup, reference, res.trace, extra);
  if (!csv_path.empty()) write_csv_file(csv_path, res.trace, extra);
  return res;
}

namespace {

json setup_json(const Setup& s) {
  return {{"beta", s.certificate.beta},
          {"enclosure", to_string(s.certificate.method)},
          {"beta_scale", s.beta_scale},
          {"gamma_bound", s.gamma_max},
          {"gamma", s.steps.gamma},
          {"rho", s.steps.rho},
          {"rho_interval", {s.steps.rho_interval.first, s.steps.rho_interval.second}},
          {"q_p", s.rates.q_p},
          {"q_d", s.rates.q_d},
          {"dual_radius", s.dual_box.radius},
          {"dual_radius_provenance", s.dual_box.provenance == DualBox::Provenance::kSlater
                                         ? "slater"
                                         : "user-supplied"},
          {"dual_radius_note", s.dual_box_note}};
}

json reference_json(const SaddleResult& r) {
  return {{"x", vec_json(r.x)},
          {"mu", vec_json(r.mu)},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"converged", r.converged}};
}

json run_json(const RunResult& r) {
  json out = {{"seed", r.seed},
              {"comm_prob", r.comm_prob},
              {"csv", r.csv_path},
              {"iterations_to_1e-3", r.iterations_to_1e3},
              {"final_rel_err", r.final_rel_err},
              {"tail_mean", r.tail_mean},
              {"tail_var", r.tail_var},
              {"converged", r.trace.converged},
              {"discards", r.trace.rows.back().discards},
              {"messages", r.trace.rows.back().messages}};
  if (!r.audit.is_null()) out["audit"] = r.audit;
  return out;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

/// Runs tasks on up to hardware_concurrency threads, preserving result order.
template <typename F>
auto parallel_map(std::size_t count, F f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  std::vector<R> results;
  results.reserve(count);
  for (std::size_t start = 0; start < count; start += width) {
    std::vector<std::future<R>> batch;
    for (std::size_t i = start; i < std::min(count, start + width); ++i)
      batch.push_back(std::async(std::launch::async, f, i));
    for (auto& fut : batch) results.push_back(fut.get());
  }
  return results;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

// ---------------------------------------------------------------------------
// Commands

SaddleResult reference_solution(const Setup& setup) {
  // The saddle point does not depend on the step sizes. The synchronous iteration
  // can oscillate at the configured rho, so smaller dual steps are tried in turn.
  SolveOptions opts;
  opts.max_iters = 2'000'000;
  double rho = setup.steps.rho;
  SaddleResult best;
  for (int attempt = 0; attempt < 12; ++attempt, rho *= 0.5) {
    SaddleResult r = solve_saddle(setup.problem, setup.dual_box, setup.steps.gamma, rho, opts);
    if (r.converged) return r;
    if (attempt == 0 || r.residual < best.residual) best = std::move(r);
  }
  return best;
}

VerifyReport cmd_verify(const ExperimentConfig& c, std::ostream& log) {
  VerifyReport rep;
  auto add = [&](std::string name, bool pass, std::string detail) {
    log << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
    rep.items.push_back({std::move(name), pass, std::move(detail)});
  };

  ConvexProblem p = base_problem(c);
  if (c.beta_scale != 1.0) p = p.with_scaled_objective(c.beta_scale);
  rep.data["n"] = p.n();
  rep.data["m"] = p.m();
  rep.data["delta"] = p.delta();

  // Slater's condition.
  if (c.slater_point) {
    Vector s = Eigen::Map<const Vector>(c.slater_point->data(), c.slater_point->size());
    require(s.size() == p.n(), "slater_point: dimension mismatch");
    SlaterReport sr = check_slater(p, s);
    rep.data["slater_g"] = vec_json(sr.g_value);
    add("Slater point", sr.in_box && sr.strictly_feasible,
        std::string(sr.in_box ? "" : "outside X; ") + "max g = " + fmt(sr.g_value.maxCoeff()));
  } else if (auto minima = affine_constraint_minima(p)) {
    rep.data["affine_min_g"] = vec_json(*minima);
    Eigen::Index worst = 0;
    minima->maxCoeff(&worst);
    if ((*minima)(worst) >= 0.0) {
      auto& A = dynamic_cast<const AffineConstraints&>(p.constraints());
      add("Slater point", false,
          "none exists: constraint " + std::to_string(worst + 1) + " has min over X of (A x)_" +
              std::to_string(worst + 1) + " = " + fmt((*minima)(worst) + A.b()(worst)) +
              " >= b = " + fmt(A.b()(worst)));
    } else {
      add("Slater point", false,
          "not established: every constraint is individually satisfiable; supply slater_point");
    }
  } else {
    add("Slater point", false, "not established: supply slater_point");
  }

  // Dual set M.
  DualBox box;
  bool have_box = false;
  try {
    if (c.dual_radius_override) {
      box.radius = *c.dual_radius_override;
      box.provenance = DualBox::Provenance::kUserSupplied;
      have_box = true;
      add("Dual set M", true, "radius " + fmt(box.radius) + " (user-supplied override)");
    } else if (c.slater_point) {
      Vector s = Eigen::Map<const Vector>(c.slater_point->data(), c.slater_point->size());
      box = dual_bound(p, s, c.h_lower);
      have_box = true;
      add("Dual set M", true, "radius " + fmt(box.radius) + " from the Slater point");
    } else {
      add("Dual set M", false, "requires slater_point or dual_radius_override");
    }
  } catch (const std::exception& e) {
    add("Dual set M", false, e.what());
  }
  if (have_box) rep.data["dual_radius"] = box.radius;

  double gmax = 0.0;
  bool dominant = false;
  if (have_box) {
    try {
      DominanceCertificate cert = verify_dominance(p, box);
      dominant = true;
      rep.data["beta"] = cert.beta;
      rep.data["enclosure"] = to_string(cert.method);
      add("Diagonal dominance", true,
          "beta = " + fmt(cert.beta) + " (" + to_string(cert.method) + ")");
    } catch (const CertificationError& e) {
      add("Diagonal dominance", false, std::string(e.what()) + ", margin " + fmt(e.margin()));
    }
  }
  if (dominant) {
    gmax = gamma_bound(p, box);
    rep.data["gamma_bound"] = gmax;
    double gamma = c.gamma.value_or(0.9 * gmax);
    rep.data["gamma"] = gamma;
    add("Primal step size", gamma > 0.0 && gamma < gmax,
        "gamma = " + fmt(gamma) + ", bound 1/" + fmt(1.0 / gmax) + " = " + fmt(gmax));
  }
  auto interval = rho_interval(p.delta());
  double rho = c.rho.value_or(1.0 / p.delta());
  rep.data["rho"] = rho;
  rep.data["rho_interval"] = {interval.first, interval.second};
  rep.data["q_d"] = qd(rho, p.delta());
  add("Dual step size", qd_admissible(rho, p.delta()),
      "rho = " + fmt(rho) + " in (" + fmt(interval.first) + ", " + fmt(interval.second) +
          "), q_d = " + fmt(qd(rho, p.delta())));

  json items = json::array();
  for (const auto& it : rep.items)
    items.push_back({{"name", it.name}, {"pass", it.pass}, {"detail", it.detail}});
  rep.data["checks"] = items;
  return rep;
}

json cmd_solve(const ExperimentConfig& c, std::ostream& log) {
  Setup setup = resolve_setup(c);
  SaddleResult ref = reference_solution(setup);
  log << "reference: " << ref.iterations << " synchronous iterations, residual "
      << fmt(ref.residual) << (ref.converged ? "" : " (NOT converged)") << '\n';

  // Synchronous baseline trace.
  {
    ExperimentConfig sync = c;
    sync.schedule = Schedule::synchronous(c.ticks);
    sync.audit = false;
    simulate(sync, setup, ref, 0, c.output + "_sync.csv");
  }

  auto runs = parallel_map(c.seeds.size(), [&](std::size_t i) {
    std::uint64_t seed = c.seeds[i];
    RunResult r = simulate(c, setup, ref, seed, c.output + "_seed" + std::to_string(seed) + ".csv");
    r.trace.rows.clear();
    r.trace.rows.shrink_to_fit();
    return r;
  });

  json summary;
  summary["config"] = config_to_json(c);
  summary["setup"] = setup_json(setup);
  summary["reference"] = reference_json(ref);
  summary["sync_csv"] = c.output + "_sync.csv";
  json arr = json::array();
  for (const RunResult& r : runs) {
    json rj = {{"seed", r.seed},
               {"csv", r.csv_path},
               {"iterations_to_1e-3", r.iterations_to_1e3},
               {"final_rel_err", r.final_rel_err},
               {"tail_mean", r.tail_mean},
               {"tail_var", r.tail_var},
               {"converged", r.trace.converged}};
    if (!r.audit.is_null()) rj["audit"] = r.audit;
    arr.push_back(rj);
    log << "seed " << r.seed << ": final rel err " << fmt(r.final_rel_err)
        << (r.trace.converged ? "" : " (not converged)");
    if (!r.audit.is_null())
      log << ", audits: primal " << (r.audit["primal_envelope"]["holds"].get<bool>() ? "ok" : "FAIL")
          << ", dual step " << (r.audit["dual_one_step"]["holds"].get<bool>() ? "ok" : "FAIL")
          << ", dual asymptote "
          << (r.audit["dual_asymptote"]["holds"].get<bool>() ? "ok" : "FAIL") << ", overall "
          << (r.audit["overall_fit"]["holds"].get<bool>() ? "ok" : "FAIL");
    log << '\n';
  }
  summary["runs"] = arr;
  write_json(c.output + "_summary.json", summary);
  return summary;
}

json cmd_sweep(const ExperimentConfig& c, std::ostream& log) {
  require(!c.sweep.parameter.empty() && !c.sweep.values.empty(),
          "sweep: configure sweep.parameter and a nonempty sweep.values");
  const std::string& param = c.sweep.parameter;

  std::vector<ExperimentConfig> configs;
  for (double v : c.sweep.values) {
    ExperimentConfig k = c;
    if (param == "beta_scale") {
      k.beta_scale = v;
    } else if (param == "comm_prob") {
      require(k.schedule.mode == Schedule::Mode::kBernoulli,
              "sweep: comm_prob requires a bernoulli schedule");
      k.schedule.comm_prob = v;
    } else if (param == "rho") {
      k.rho = v;
    } else {
      k.gamma = v;
    }
    configs.push_back(std::move(k));
  }

  // Scaling h changes gamma_bound; one step size admissible at every scale keeps
  // the other terms fixed while beta varies.
  std::optional<double> common_gamma;
  if (param == "beta_scale" && !c.gamma) {
    double gmin = std::numeric_limits<double>::infinity();
    for (const auto& k : configs) {
      ProblemAndBox pb = resolve_problem(k);
      gmin = std::min(gmin, gamma_bound(pb.problem, pb.box));
    }
    common_gamma = 0.9 * gmin;
  }

  std::vector<Setup> setups;
  std::vector<SaddleResult> refs;
  for (const auto& k : configs) {
    setups.push_back(resolve_setup(k, common_gamma));
    refs.push_back(reference_solution(setups.back()));
  }

  const std::size_t n_seeds = c.seeds.size();
  auto runs = parallel_map(configs.size() * n_seeds, [&](std::size_t idx) {
    std::size_t v = idx / n_seeds, s = idx % n_seeds;
    std::uint64_t seed = c.seeds[s];
    std::string path = c.output + "_" + param + "_" + fmt(c.sweep.values[v]) + "_seed" +
                       std::to_string(seed) + ".csv";
    RunResult r = simulate(configs[v], setups[v], refs[v], seed, path);
    r.trace.rows.erase(r.trace.rows.begin(), r.trace.rows.end() - 1);
    return r;
  });

  json summary;
  summary["config"] = config_to_json(c);
  summary["parameter"] = param;
  summary["values"] = c.sweep.values;
  if (common_gamma) summary["gamma_common"] = *common_gamma;
  json settings = json::array();
  log << param << "  beta  gamma  median_iters_to_1e-3  mean_tail_mean  mean_tail_var\n";
  for (std::size_t v = 0; v < configs.size(); ++v) {
    json arr = json::array();
    std::vector<long> iters;
    double tm = 0.0, tv = 0.0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const RunResult& r = runs[v * n_seeds + s];
      arr.push_back(run_json(r));
      iters.push_back(r.iterations_to_1e3 < 0 ? std::numeric_limits<long>::max()
                                              : r.iterations_to_1e3);
      tm += r.tail_mean;
      tv += r.tail_var;
    }
    std::sort(iters.begin(), iters.end());
    long med = iters[iters.size() / 2];
    json med_json = med == std::numeric_limits<long>::max() ? json(-1) : json(med);
    tm /= n_seeds;
    tv /= n_seeds;
    settings.push_back({{"value", c.sweep.values[v]},
                        {"setup", setup_json(setups[v])},
                        {"reference", reference_json(refs[v])},
                        {"runs", arr},
                        {"median_iterations_to_1e-3", med_json},
                        {"mean_tail_mean", tm},
                        {"mean_tail_var", tv}});
    log << fmt(c.sweep.values[v]) << "  " << fmt(setups[v].certificate.beta) << "  "
        << fmt(setups[v].steps.gamma) << "  " << med_json.dump() << "  " << fmt(tm) << "  "
        << fmt(tv) << '\n';
  }
  summary["settings"] = settings;
  write_json(c.output + "_sweep.json", summary);
  return summary;
}

json cmd_counterexample(const CounterexampleSpec& spec, std::uint64_t seed,
                        const std::string& output, std::ostream& log) {
  CounterexampleInstance inst = build_counterexample(spec.epsilon, spec.L, spec.n, seed);
  CounterexampleReport rep = verify_counterexample(inst);
  DivergenceDemo demo = demo_divergence(inst, Schedule::bernoulli(2000, 0.5, seed), 2000);

  json instance = problem_to_json(counterexample_problem(inst));
  instance["mu1"] = vec_json(inst.mu1);
  instance["mu2"] = vec_json(inst.mu2);
  instance["epsilon"] = inst.epsilon;
  instance["L"] = inst.L;
  instance["seed"] = seed;
  write_json(output + "_instance.json", instance);

  json out = {{"epsilon", inst.epsilon},
              {"L", inst.L},
              {"n", inst.n},
              {"seed", seed},
              {"dual_gap", rep.dual_gap},
              {"primal_gap", rep.primal_gap},
              {"sigma_min", rep.sigma_min},
              {"lower_bound", rep.lower_bound},
              {"lambda_max", rep.lambda_max},
              {"sigma_spectrum_error", rep.sigma_spectrum_error},
              {"orthonormality_error", rep.orthonormality_error},
              {"demo_terminal_gap", demo.terminal_gap},
              {"demo_gamma", demo.gamma},
              {"demo_schedule", demo.used_given_schedule ? "bernoulli(0.5)" : "synchronous"},
              {"instance", output + "_instance.json"}};
  write_json(output + "_counterexample.json", out);
  log << "|mu1 - mu2|        = " << fmt(rep.dual_gap) << "  (< epsilon = " << fmt(inst.epsilon)
      << ")\n"
      << "|x1 - x2|          = " << fmt(rep.primal_gap) << "  (> L = " << fmt(inst.L) << ")\n"
      << "sigma_min          = " << fmt(rep.sigma_min) << "  (1 / lambda_max = "
      << fmt(1.0 / rep.lambda_max) << ")\n"
      << "sigma_min |dmu|    = " << fmt(rep.lower_bound) << "  (<= |x1 - x2|)\n"
      << "simulated gap      = " << fmt(demo.terminal_gap) << " after 2000 ticks\n";
  return out;
}

}  // namespace apd
