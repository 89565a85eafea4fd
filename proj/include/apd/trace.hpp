#pragma once

#include "apd/types.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace apd {

/// World state recorded once per tick, after that tick's deliveries and
/// broadcast absorption (the state the tick's computations read).
struct TraceRow {
  long k = 0;
  long ops = 0;
  long epoch = 0;
  std::vector<long> t;
  /// x^i_i for every primal agent i.
  Vector x_own;
  /// Dual vector onboard the primal agents.
  Vector mu;
  /// Column i is primal agent i's local copy x^i. Empty unless recorded.
  Matrix x_local;
  long discards = 0;
  long messages = 0;

  // Filled in against a reference saddle point.
  double rel_primal_err = 0.0;
  Vector dual_err_sq;
  double constraint_violation_max = 0.0;
};

/// One gated dual update.
struct DualUpdateRecord {
  long k = 0;
  long c = 0;
  long t_c = 0;       // count before the update
  long epoch = 0;     // stamp epoch the snapshot belongs to
  double mu_before = 0.0;
  double mu_after = 0.0;
  /// ops(k_c, t): ops when the first snapshot of this epoch reached agent c.
  long ops_at_first_send = 0;
  long first_send_tick = 0;
  Vector snapshot;
};

/// State at the moment a stamp epoch began or an ops cycle completed.
struct EpochMark {
  long k = 0;
  long epoch = 0;
  long ops = 0;
  std::vector<long> t;
  Vector mu;
  Matrix x_local;
};

struct Trace {
  long n = 0;
  long m = 0;
  std::uint64_t seed = 0;
  double comm_prob = 1.0;
  double beta_scale = 1.0;

  std::vector<TraceRow> rows;
  std::vector<DualUpdateRecord> dual_updates;
  std::vector<EpochMark> epoch_starts;
  std::vector<EpochMark> ops_increments;
  /// Blocks that agent i's gradient depends on: i itself and its essential neighbors.
  std::vector<std::vector<long>> relevant;

  bool converged = false;
};

/// Extra per-tick columns appended after the base schema.
struct ExtraColumn {
  std::string name;
  std::vector<double> values;  // one per row
};

/// k, seed, comm_prob, beta_scale, ops, t_1..t_m, rel_primal_err, dual_err_sq_1..m,
/// constraint_violation_max, discards.
std::vector<std::string> csv_header(long m);

void write_csv(std::ostream& out, const Trace& trace, const std::vector<ExtraColumn>& extra = {});
void write_csv_file(const std::string& path, const Trace& trace,
                    const std::vector<ExtraColumn>& extra = {});

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace apd
