#pragma once

#include "apd/problem.hpp"
#include "apd/schedule.hpp"
#include "apd/trace.hpp"

#include <optional>
#include <vector>

namespace apd {

struct MessageEvent {
  enum class Kind { kPrimalToPrimal, kPrimalToDual, kDualBroadcast };

  Kind kind = Kind::kPrimalToPrimal;
  long from = 0;
  long to = 0;  // unused for broadcasts
  double payload = 0.0;
  /// Dual iteration vector t for primal messages; {t_c} for broadcasts.
  std::vector<long> stamp;
  long send_tick = 0;
  /// Phase sequence number of the update that produced `payload` (ops bookkeeping).
  long version = 0;
};

struct PrimalAgentState {
  long index = 0;
  Vector x_local;
  Vector mu_local;
  std::vector<long> t_stamp;
  /// Stamp epoch each entry of x_local is labelled with.
  std::vector<long> entry_epoch;
  /// Update version of each entry of x_local.
  std::vector<long> entry_version;
  long epoch = 0;
  long discards = 0;
};

struct DualAgentState {
  long index = 0;
  double mu_own = 0.0;
  long t_c = 0;
  Vector x_snapshot;
  /// v^c_i: snapshots from agent i received under stamp_seen since the last update.
  std::vector<long> fresh;
  std::vector<long> stamp_seen;
  long discards = 0;
  /// ops and tick when the first snapshot under stamp_seen arrived; -1 if none yet.
  long first_send_ops = -1;
  long first_send_tick = -1;
};

/// Counts completed compute-and-deliver cycles under one dual stamp.
///
/// Events are grouped into phases; every event of a phase carries the same
/// sequence number, so a cycle can only be credited with updates computed in a
/// later phase than the one that closed the previous cycle.
class OpsCounter {
 public:
  OpsCounter() = default;
  explicit OpsCounter(std::vector<std::vector<long>> neighbors);

  long value() const { return ops_; }
  long phase() const { return phase_; }
  /// Starts a new phase and returns its sequence number.
  long next_phase() { return ++phase_; }

  void record_update(long agent);
  /// `receiver` now holds `source`'s block as produced by update `version`.
  void record_delivery(long receiver, long source, long version);
  long last_update(long agent) const { return last_update_[agent]; }
  /// Closes the cycle if complete; returns true when ops was incremented.
  bool close_phase();
  /// Dual stamp changed: the cycle count begins again.
  void reset();

 private:
  std::vector<std::vector<long>> neighbors_;
  std::vector<long> last_update_;
  std::vector<std::vector<long>> received_;  // parallel to neighbors_
  long ops_ = 0;
  long phase_ = 0;
  long cycle_start_ = 0;
};

/// One entry of an offline event log. Events sharing `phase` are simultaneous.
/// A delivery hands the receiver the source's most recent update (zero delay).
struct OpsEvent {
  enum class Kind { kUpdate, kDelivery, kStampChange };

  long phase = 0;
  Kind kind = Kind::kUpdate;
  long agent = 0;      // updating agent, or delivery source
  long receiver = -1;  // deliveries only
};

/// Replays an event log (sorted by phase) and returns ops after each distinct phase.
std::vector<long> ops_count(const std::vector<OpsEvent>& events,
                            const std::vector<std::vector<long>>& neighbors);

/// Discard the message when its stamp is older than the agent's, overwrite x^i_j
/// when equal. A stamp from the future cannot occur with zero-delay broadcasts and
/// is rejected with std::logic_error.
PrimalAgentState absorb_primal_message(PrimalAgentState agent, const MessageEvent& msg);

/// When every primal agent has a fresh snapshot under the agent's stamp,
/// mu_c <- Pi_[0, radius](mu_c + rho (g_c(x^c) - delta mu_c)), t_c += 1, freshness
/// cleared. No-op otherwise.
DualAgentState dual_gate_and_update(DualAgentState agent, const ConvexProblem& p,
                                    const DualBox& dual_box, double rho);

struct SimOptions {
  std::optional<Vector> x0;  // default: box midpoint
  std::optional<Vector> mu0; // default: 0
  /// No dual agent ever updates (mu frozen at mu0).
  bool freeze_duals = false;
  /// Store every agent's full local copy in each TraceRow.
  bool record_locals = true;
};

/// The simulated system between ticks. Holds the time-k state: all agents' local
/// copies after tick k's primal deliveries and broadcast absorption.
class World {
 public:
  World(ConvexProblem p, DualBox dual_box, Schedule schedule, double gamma, double rho,
        SimOptions opts = {});

  /// Finishes tick k (dual traffic and updates, primal updates), then opens tick k+1.
  void advance();

  long k() const { return k_; }
  long ops() const { return ops_.value(); }
  long epoch() const { return epoch_; }
  const std::vector<long>& stamp() const { return t_; }
  const std::vector<PrimalAgentState>& primal_agents() const { return primal_; }
  const std::vector<DualAgentState>& dual_agents() const { return dual_; }
  const std::vector<std::vector<long>>& neighbors() const { return neighbors_; }
  const ConvexProblem& problem() const { return p_; }
  long total_discards() const;
  long total_messages() const { return messages_; }

  Vector own_blocks() const;
  TraceRow snapshot_row() const;

  const std::vector<DualUpdateRecord>& dual_updates() const { return dual_updates_; }
  const std::vector<EpochMark>& epoch_starts() const { return epoch_starts_; }
  const std::vector<EpochMark>& ops_increments() const { return ops_increments_; }

 private:
  void open_tick();          // deliveries, then broadcasts
  void deliver_primal();
  void absorb_broadcasts();
  void send_to_duals();      // payload x^i_i(k)
  void update_duals();       // absorb, gated update, broadcast
  void update_primals();
  void close_phase();
  EpochMark mark() const;
  Matrix locals() const;

  ConvexProblem p_;
  DualBox dual_box_;
  Schedule schedule_;
  double gamma_;
  double rho_;
  SimOptions opts_;

  std::vector<std::vector<long>> neighbors_;
  std::vector<PrimalAgentState> primal_;
  std::vector<DualAgentState> dual_;
  std::vector<MessageEvent> pending_broadcasts_;
  std::vector<MessageEvent> dual_inbox_;
  OpsCounter ops_;
  std::vector<long> t_;
  long k_ = 0;
  long epoch_ = 0;
  long messages_ = 0;

  std::vector<DualUpdateRecord> dual_updates_;
  std::vector<EpochMark> epoch_starts_;
  std::vector<EpochMark> ops_increments_;
};

/// Functional form of World::advance.
World tick(World world);

struct RunOptions {
  SimOptions sim;
  std::uint64_t seed = 0;
  double comm_prob = 1.0;
  double beta_scale = 1.0;
  double conv_tol = 1e-6;
};

/// Simulates `ticks` ticks and returns ticks + 1 rows (k = 0 .. ticks). When a
/// reference is given the error columns are filled against it.
Trace run(const ConvexProblem& p, const DualBox& dual_box, const Schedule& schedule,
          double gamma, double rho, long ticks, const RunOptions& opts = {},
          const Vector* x_ref = nullptr, const Vector* mu_ref = nullptr);

/// Fills rel_primal_err, dual_err_sq and constraint_violation_max, and sets
/// `converged` when the final max-norm distance to (x_ref, mu_ref) is below conv_tol.
void attach_reference(Trace& trace, const ConvexProblem& p, const Vector& x_ref,
                      const Vector& mu_ref, double conv_tol = 1e-6);

}  // namespace apd
