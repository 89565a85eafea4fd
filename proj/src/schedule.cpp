#include "apd/schedule.hpp"

#include "apd/types.hpp"

#include <algorithm>

namespace apd {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kCompute = 1, kPrimalComm = 2, kDualComm = 3 };

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                       std::uint64_t b, std::uint64_t k) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ k);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

TickSet TickSet::periodic(long period, std::vector<long> offsets) {
  require(period >= 1, "TickSet: period must be positive");
  for (long o : offsets) require(o >= 0 && o < period, "TickSet: offset outside [0, period)");
  std::sort(offsets.begin(), offsets.end());
  offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
  return TickSet(Periodic{period, std::move(offsets)});
}

TickSet TickSet::list(std::vector<long> ticks) {
  for (long t : ticks) require(t >= 0, "TickSet: ticks must be nonnegative");
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
  return TickSet(Explicit{std::move(ticks)});
}

bool TickSet::contains(long k) const {
  return std::visit(
      Overloaded{[](const Every&) { return true; }, [](const Never&) { return false; },
                 [k](const Periodic& p) {
                   return std::binary_search(p.offsets.begin(), p.offsets.end(), k % p.period);
                 },
                 [k](const Explicit& e) {
                   return std::binary_search(e.ticks.begin(), e.ticks.end(), k);
                 }},
      rep_);
}

bool TickSet::meets_every_window(long window, long horizon) const {
  if (window < 1) return false;
  if (horizon <= 0) return true;
  // A run shorter than one window still needs at least one event inside it.
  window = std::min(window, horizon);
  return std::visit(
      Overloaded{[](const Every&) { return true; }, [](const Never&) { return false; },
                 [&](const Periodic& p) {
                   if (p.offsets.empty()) return false;
                   long max_gap = p.offsets.front() + p.period - p.offsets.back();
                   for (std::size_t i = 1; i < p.offsets.size(); ++i)
                     max_gap = std::max(max_gap, p.offsets[i] - p.offsets[i - 1]);
                   // Leading gap before the first offset.
                   return max_gap <= window && p.offsets.front() < window;
                 },
                 [&](const Explicit& e) {
                   long next_needed = window - 1;  // window starting at 0 ends here
                   for (long t : e.ticks) {
                     if (t > next_needed) return false;
                     next_needed = t + window;
                     if (next_needed >= horizon - 1) return true;
                   }
                   return next_needed >= horizon - 1;
                 }},
      rep_);
}

bool TickSet::operator==(const TickSet& other) const {
  if (rep_.index() != other.rep_.index()) return false;
  return std::visit(
      Overloaded{[](const Every&) { return true; }, [](const Never&) { return true; },
                 [&](const Periodic& p) {
                   auto& q = std::get<Periodic>(other.rep_);
                   return p.period == q.period && p.offsets == q.offsets;
                 },
                 [&](const Explicit& e) { return e.ticks == std::get<Explicit>(other.rep_).ticks; }},
      rep_);
}

bool Schedule::computes(long i, long k) const {
  if (mode == Mode::kBernoulli)
    return compute_prob >= 1.0 || counter_uniform(seed, kCompute, i, 0, k) < compute_prob;
  auto it = compute.find(i);
  return (it == compute.end() ? compute_default : it->second).contains(k);
}

bool Schedule::sends_primal(long j, long i, long k) const {
  if (mode == Mode::kBernoulli)
    return comm_prob >= 1.0 || counter_uniform(seed, kPrimalComm, j, i, k) < comm_prob;
  auto it = primal_comm.find({j, i});
  return (it == primal_comm.end() ? primal_comm_default : it->second).contains(k);
}

bool Schedule::sends_dual(long i, long c, long k) const {
  if (mode == Mode::kBernoulli)
    return dual_comm_prob >= 1.0 || counter_uniform(seed, kDualComm, i, c, k) < dual_comm_prob;
  auto it = dual_comm.find({i, c});
  return (it == dual_comm.end() ? dual_comm_default : it->second).contains(k);
}

void Schedule::validate(long n_primal, long n_dual,
                        const std::vector<std::vector<long>>& neighbors) const {
  require(horizon >= 0, "Schedule: horizon must be nonnegative");
  if (mode == Mode::kBernoulli) {
    require(compute_prob > 0.0 && compute_prob <= 1.0, "Schedule: compute_prob must be in (0, 1]");
    require(comm_prob > 0.0 && comm_prob <= 1.0, "Schedule: comm_prob must be in (0, 1]");
    require(dual_comm_prob > 0.0 && dual_comm_prob <= 1.0,
            "Schedule: dual_comm_prob must be in (0, 1]");
    return;
  }
  require(window >= 1, "Schedule: window must be positive");
  auto check = [&](const TickSet& s, const std::string& what) {
    if (!s.meets_every_window(window, horizon))
      throw InputError("Schedule: " + what + " misses a window of " + std::to_string(window) +
                       " ticks");
  };
  for (long i = 0; i < n_primal; ++i) {
    auto it = compute.find(i);
    check(it == compute.end() ? compute_default : it->second, "K^" + std::to_string(i));
    for (long j : neighbors.at(i)) {
      auto pc = primal_comm.find({j, i});
      check(pc == primal_comm.end() ? primal_comm_default : pc->second,
            "P from " + std::to_string(j) + " to " + std::to_string(i));
    }
    for (long c = 0; c < n_dual; ++c) {
      auto dc = dual_comm.find({i, c});
      check(dc == dual_comm.end() ? dual_comm_default : dc->second,
            "D from " + std::to_string(i) + " to dual " + std::to_string(c));
    }
  }
}

Schedule Schedule::synchronous(long horizon) {
  Schedule s;
  s.mode = Mode::kDeterministic;
  s.horizon = horizon;
  s.window = 1;
  return s;
}

Schedule Schedule::bernoulli(long horizon, double comm_prob, std::uint64_t seed,
                             double compute_prob) {
  return bernoulli(horizon, comm_prob, 1.0, seed, compute_prob);
}

Schedule Schedule::bernoulli(long horizon, double comm_prob, double dual_comm_prob,
                             std::uint64_t seed, double compute_prob) {
  Schedule s;
  s.mode = Mode::kBernoulli;
  s.horizon = horizon;
  s.seed = seed;
  s.comm_prob = comm_prob;
  s.dual_comm_prob = dual_comm_prob;
  s.compute_prob = compute_prob;
  return s;
}

}  // namespace apd
