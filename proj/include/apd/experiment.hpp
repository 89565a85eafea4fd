#pragma once

#include "apd/audit.hpp"
#include "apd/certify.hpp"
#include "apd/counterexample.hpp"
#include "apd/rates.hpp"
#include "apd/schedule.hpp"
#include "apd/uzawa.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace apd {

struct SweepSpec {
  /// beta_scale | comm_prob | rho | gamma. Empty when no sweep is configured.
  std::string parameter;
  std::vector<double> values;

  bool operator==(const SweepSpec&) const = default;
};

struct CounterexampleSpec {
  double epsilon = 0.1;
  double L = 10.0;
  long n = 2;

  bool operator==(const CounterexampleSpec&) const = default;
};

struct ExperimentConfig {
  /// Exactly one problem source: a preset name, an inline problem document, or a file.
  std::string preset = "benchmark";
  nlohmann::json problem;  // null unless inline
  std::string problem_file;

  std::optional<double> dual_radius_override;
  std::optional<std::vector<double>> slater_point;
  std::optional<double> h_lower;
  std::optional<double> gamma;  // nullopt: auto = 0.9 gamma_bound
  std::optional<double> rho;    // nullopt: auto = 1 / delta
  std::optional<double> delta;  // nullopt: the problem's own delta
  double beta_scale = 1.0;

  Schedule schedule;
  SweepSpec sweep;
  std::vector<std::uint64_t> seeds{0};
  long ticks = 1000;
  std::string output = "apd_out";
  std::optional<std::vector<double>> x0;
  std::optional<std::vector<double>> mu0;
  /// Fraction of the run treated as the tail window for mean / variance.
  double tail_fraction = 0.2;
  /// Run the rate audits (requires per-tick local copies).
  bool audit = true;
  CounterexampleSpec counterexample;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

nlohmann::json schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);

/// Built-in configurations: "benchmark" (single solve), "beta_sweep" (beta_scale sweep
/// {0.9, 1, 10, 100} at comm_prob 1), "comm_sweep" (comm_prob sweep {1, 0.5, 0.1}, 20 seeds).
ExperimentConfig preset_config(const std::string& name);

/// A configuration resolved into a problem, dual set, certificate and step sizes.
struct Setup {
  ConvexProblem problem;
  DualBox dual_box;
  std::string dual_box_note;
  DominanceCertificate certificate;
  double gamma_max = 0.0;
  StepSizes steps;
  RateConstants rates;
  double beta_scale = 1.0;
};

/// Throws InputError, SlaterError, CertificationError or StepSizeError.
Setup resolve_setup(const ExperimentConfig& c, std::optional<double> gamma_override = {});

/// The problem before beta scaling, as the configuration names it.
ConvexProblem base_problem(const ExperimentConfig& c);

/// One simulated run and its derived statistics.
struct RunResult {
  std::uint64_t seed = 0;
  double comm_prob = 1.0;
  Trace trace;
  std::string csv_path;
  long iterations_to_1e3 = -1;  // first k with rel_primal_err < 1e-3, -1 if never
  double final_rel_err = 0.0;
  double tail_mean = 0.0;
  double tail_var = 0.0;
  nlohmann::json audit;  // null when audits are off
};

/// Simulates one (setup, seed) pair against the reference saddle point, writes the
/// CSV when csv_path is nonempty, and audits when requested.
RunResult simulate(const ExperimentConfig& c, const Setup& setup, const SaddleResult& reference,
                   std::uint64_t seed, const std::string& csv_path);

/// Reference saddle point for error curves: solve_saddle at the configured steps,
/// halving rho while the synchronous iteration fails to converge.
SaddleResult reference_solution(const Setup& setup);

/// Tail-window mean and population variance of rel_primal_err.
std::pair<double, double> tail_stats(const Trace& trace, double tail_fraction);

struct VerifyItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyItem> items;
  nlohmann::json data;
};

VerifyReport cmd_verify(const ExperimentConfig& c, std::ostream& log);

/// Writes <output>_seed<s>.csv per seed and <output>_summary.json; returns the summary.
nlohmann::json cmd_solve(const ExperimentConfig& c, std::ostream& log);

/// Writes one CSV per (value, seed) and <output>_sweep.json; returns the sweep summary.
nlohmann::json cmd_sweep(const ExperimentConfig& c, std::ostream& log);

/// Writes <output>_instance.json and <output>_counterexample.json; returns the report.
/// VerificationError propagates.
nlohmann::json cmd_counterexample(const CounterexampleSpec& spec, std::uint64_t seed,
                                  const std::string& output, std::ostream& log);

}  // namespace apd
