#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <variant>
#include <vector>

namespace apd {

/// A set of ticks: every tick, no tick, a periodic pattern, or an explicit list.
class TickSet {
 public:
  struct Every {};
  struct Never {};
  struct Periodic {
    long period = 1;
    std::vector<long> offsets;  // each in [0, period)
  };
  struct Explicit {
    std::vector<long> ticks;  // sorted, unique
  };

  TickSet() : rep_(Every{}) {}
  static TickSet every() { return TickSet(Every{}); }
  static TickSet never() { return TickSet(Never{}); }
  static TickSet periodic(long period, std::vector<long> offsets);
  static TickSet list(std::vector<long> ticks);

  bool contains(long k) const;
  /// Whether every window [s, s + window) with 0 <= s <= horizon - window meets the set.
  bool meets_every_window(long window, long horizon) const;

  const std::variant<Every, Never, Periodic, Explicit>& rep() const { return rep_; }
  bool operator==(const TickSet& other) const;

 private:
  template <typename T>
  explicit TickSet(T rep) : rep_(std::move(rep)) {}

  std::variant<Every, Never, Periodic, Explicit> rep_;
};

/// Computation times K^i, primal-to-primal send times P, and primal-to-dual send
/// times D, either as explicit tick sets or as independent seeded coin flips.
struct Schedule {
  enum class Mode { kDeterministic, kBernoulli };

  Mode mode = Mode::kBernoulli;
  long horizon = 0;
  /// Every set must be nonempty inside every window of this many ticks.
  long window = 100;
  std::uint64_t seed = 0;

  // Bernoulli mode.
  double compute_prob = 1.0;
  double comm_prob = 1.0;
  double dual_comm_prob = 1.0;

  // Deterministic mode. compute_default applies to agents without an entry.
  TickSet compute_default;
  std::map<long, TickSet> compute;
  TickSet primal_comm_default;
  /// Keyed by (sender j, receiver i).
  std::map<std::pair<long, long>, TickSet> primal_comm;
  TickSet dual_comm_default;
  /// Keyed by (primal sender i, dual receiver c).
  std::map<std::pair<long, long>, TickSet> dual_comm;

  /// k in K^i.
  bool computes(long i, long k) const;
  /// Primal agent j sends its block to primal agent i at tick k.
  bool sends_primal(long j, long i, long k) const;
  /// Primal agent i sends its block to dual agent c at tick k.
  bool sends_dual(long i, long c, long k) const;

  /// Throws InputError unless every required set is eventually and repeatedly
  /// nonempty: windows for deterministic schedules, positive probabilities otherwise.
  void validate(long n_primal, long n_dual,
                const std::vector<std::vector<long>>& neighbors) const;

  /// All events fire at every tick; the synchronous special case.
  static Schedule synchronous(long horizon);
  /// Primal-to-primal links fire with comm_prob; primal-to-dual sends every tick.
  static Schedule bernoulli(long horizon, double comm_prob, std::uint64_t seed,
                            double compute_prob = 1.0);
  static Schedule bernoulli(long horizon, double comm_prob, double dual_comm_prob,
                            std::uint64_t seed, double compute_prob);

  bool operator==(const Schedule& other) const = default;
};

/// Uniform draw in [0, 1) determined only by (seed, stream, a, b, k).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                       std::uint64_t b, std::uint64_t k);

}  // namespace apd
