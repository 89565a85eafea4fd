#include "apd/simulator.hpp"

#include "apd/certify.hpp"
#include "apd/projection.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace apd {

// ---------------------------------------------------------------------------
// OpsCounter

OpsCounter::OpsCounter(std::vector<std::vector<long>> neighbors)
    : neighbors_(std::move(neighbors)),
      last_update_(neighbors_.size(), 0),
      received_(neighbors_.size()) {
  for (std::size_t i = 0; i < neighbors_.size(); ++i)
    received_[i].assign(neighbors_[i].size(), 0);
}

void OpsCounter::record_update(long agent) { last_update_[agent] = phase_; }

void OpsCounter::record_delivery(long receiver, long source, long version) {
  const auto& nb = neighbors_[receiver];
  auto it = std::find(nb.begin(), nb.end(), source);
  if (it == nb.end()) return;  // not needed by the receiver
  long& slot = received_[receiver][it - nb.begin()];
  slot = std::max(slot, version);
}

bool OpsCounter::close_phase() {
  for (std::size_t i = 0; i < neighbors_.size(); ++i) {
    if (last_update_[i] <= cycle_start_) return false;
    for (long v : received_[i])
      if (v <= cycle_start_) return false;
  }
  ++ops_;
  cycle_start_ = phase_;
  return true;
}

void OpsCounter::reset() {
  ops_ = 0;
  cycle_start_ = phase_;
}

std::vector<long> ops_count(const std::vector<OpsEvent>& events,
                            const std::vector<std::vector<long>>& neighbors) {
  OpsCounter counter(neighbors);
  std::vector<long> out;
  std::size_t e = 0;
  while (e < events.size()) {
    const long phase = events[e].phase;
    counter.next_phase();
    bool stamp_change = false;
    for (; e < events.size() && events[e].phase == phase; ++e) {
      const OpsEvent& ev = events[e];
      switch (ev.kind) {
        case OpsEvent::Kind::kUpdate:
          counter.record_update(ev.agent);
          break;
        case OpsEvent::Kind::kDelivery:
          counter.record_delivery(ev.receiver, ev.agent, counter.last_update(ev.agent));
          break;
        case OpsEvent::Kind::kStampChange:
          stamp_change = true;
          break;
      }
    }
    if (stamp_change)
      counter.reset();
    else
      counter.close_phase();
    out.push_back(counter.value());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Agent-level operations

namespace {

enum class StampOrder { kEqual, kOlder, kNewer };

StampOrder compare_stamps(const std::vector<long>& msg, const std::vector<long>& own) {
  if (msg == own) return StampOrder::kEqual;
  for (std::size_t c = 0; c < msg.size(); ++c)
    if (msg[c] > own[c]) return StampOrder::kNewer;
  return StampOrder::kOlder;
}

/// Returns true when the message was accepted.
bool absorb_in_place(PrimalAgentState& agent, const MessageEvent& msg) {
  switch (compare_stamps(msg.stamp, agent.t_stamp)) {
    case StampOrder::kEqual:
      agent.x_local(msg.from) = msg.payload;
      agent.entry_epoch[msg.from] = agent.epoch;
      agent.entry_version[msg.from] = msg.version;
      return true;
    case StampOrder::kOlder:
      ++agent.discards;
      return false;
    case StampOrder::kNewer:
      break;
  }
  throw std::logic_error("primal message stamped ahead of its receiver");
}

bool gate_open(const DualAgentState& agent) {
  return std::all_of(agent.fresh.begin(), agent.fresh.end(), [](long v) { return v > 0; });
}

void dual_update_in_place(DualAgentState& agent, const ConvexProblem& p, const DualBox& dual_box,
                          double rho) {
  double g = p.constraints().component(agent.x_snapshot, agent.index);
  agent.mu_own =
      project_interval(agent.mu_own + rho * (g - p.delta() * agent.mu_own), 0.0, dual_box.radius);
  ++agent.t_c;
  std::fill(agent.fresh.begin(), agent.fresh.end(), 0);
}

}  // namespace

PrimalAgentState absorb_primal_message(PrimalAgentState agent, const MessageEvent& msg) {
  require(msg.kind == MessageEvent::Kind::kPrimalToPrimal,
          "absorb_primal_message: not a primal-to-primal message");
  require(msg.from >= 0 && msg.from < agent.x_local.size(),
          "absorb_primal_message: sender out of range");
  // tau^i_i(k) = k: an agent's own block is never overwritten by a message.
  if (msg.from == agent.index) return agent;
  absorb_in_place(agent, msg);
  return agent;
}

DualAgentState dual_gate_and_update(DualAgentState agent, const ConvexProblem& p,
                                    const DualBox& dual_box, double rho) {
  if (gate_open(agent)) dual_update_in_place(agent, p, dual_box, rho);
  return agent;
}

// ---------------------------------------------------------------------------
// World

World::World(ConvexProblem p, DualBox dual_box, Schedule schedule, double gamma, double rho,
             SimOptions opts)
    : p_(std::move(p)),
      dual_box_(dual_box),
      schedule_(std::move(schedule)),
      gamma_(gamma),
      rho_(rho),
      opts_(std::move(opts)) {
  const long n = p_.n();
  const long m = p_.m();
  require(gamma_ > 0.0, "World: gamma must be positive");
  require(rho_ > 0.0, "World: rho must be positive");
  Vector x0 = opts_.x0.value_or(p_.box().midpoint());
  Vector mu0 = opts_.mu0.value_or(Vector::Zero(m));
  require(x0.size() == n && mu0.size() == m, "World: initial point dimension mismatch");
  require(p_.box().contains(x0), "World: x0 must lie in X");
  require(dual_box_.contains(mu0), "World: mu0 must lie in M");

  for (const auto& row : essential_neighbors(p_, dual_box_)) {
    neighbors_.emplace_back(row.begin(), row.end());
  }
  schedule_.validate(n, opts_.freeze_duals ? 0 : m, neighbors_);

  t_.assign(m, 0);
  primal_.resize(n);
  for (long i = 0; i < n; ++i) {
    auto& a = primal_[i];
    a.index = i;
    a.x_local = x0;
    a.mu_local = mu0;
    a.t_stamp = t_;
    a.entry_epoch.assign(n, 0);
    a.entry_version.assign(n, 0);
  }
  if (!opts_.freeze_duals) {
    dual_.resize(m);
    for (long c = 0; c < m; ++c) {
      auto& d = dual_[c];
      d.index = c;
      d.mu_own = mu0(c);
      d.x_snapshot = x0;
      d.fresh.assign(n, 0);
      d.stamp_seen = t_;
    }
  }
  ops_ = OpsCounter(neighbors_);
  epoch_starts_.push_back(mark());
  open_tick();
}

void World::advance() {
  send_to_duals();
  update_duals();
  update_primals();
  ++k_;
  open_tick();
}

void World::open_tick() {
  deliver_primal();
  absorb_broadcasts();
}

void World::deliver_primal() {
  ops_.next_phase();
  const long n = p_.n();
  for (long i = 0; i < n; ++i) {
    for (long j : neighbors_[i]) {
      if (!schedule_.sends_primal(j, i, k_)) continue;
      MessageEvent msg;
      msg.kind = MessageEvent::Kind::kPrimalToPrimal;
      msg.from = j;
      msg.to = i;
      msg.payload = primal_[j].x_local(j);
      msg.stamp = primal_[j].t_stamp;
      msg.send_tick = k_;
      msg.version = ops_.last_update(j);
      ++messages_;
      if (absorb_in_place(primal_[i], msg)) ops_.record_delivery(i, j, msg.version);
    }
  }
  close_phase();
}

void World::absorb_broadcasts() {
  if (pending_broadcasts_.empty()) return;
  for (const MessageEvent& msg : pending_broadcasts_) {
    t_[msg.from] = msg.stamp.front();
    for (auto& a : primal_) {
      a.mu_local(msg.from) = msg.payload;
      a.t_stamp[msg.from] = msg.stamp.front();
    }
    messages_ += static_cast<long>(primal_.size());
  }
  pending_broadcasts_.clear();
  ++epoch_;
  // Local copies continue under the new stamp.
  for (auto& a : primal_) {
    a.epoch = epoch_;
    std::fill(a.entry_epoch.begin(), a.entry_epoch.end(), epoch_);
  }
  for (auto& d : dual_) {
    d.discards += std::count_if(d.fresh.begin(), d.fresh.end(), [](long v) { return v > 0; });
    std::fill(d.fresh.begin(), d.fresh.end(), 0);
    d.stamp_seen = t_;
    d.first_send_ops = -1;
    d.first_send_tick = -1;
  }
  ops_.next_phase();
  ops_.reset();
  epoch_starts_.push_back(mark());
}

void World::send_to_duals() {
  const long n = p_.n();
  for (long i = 0; i < n; ++i) {
    for (long c = 0; c < static_cast<long>(dual_.size()); ++c) {
      if (!schedule_.sends_dual(i, c, k_)) continue;
      MessageEvent msg;
      msg.kind = MessageEvent::Kind::kPrimalToDual;
      msg.from = i;
      msg.to = c;
      msg.payload = primal_[i].x_local(i);
      msg.stamp = primal_[i].t_stamp;
      msg.send_tick = k_;
      msg.version = ops_.last_update(i);
      dual_inbox_.push_back(std::move(msg));
      ++messages_;
    }
  }
}

void World::update_duals() {
  // Most recent snapshot per primal agent wins; inbox order is by sender.
  for (const MessageEvent& msg : dual_inbox_) {
    DualAgentState& d = dual_[msg.to];
    switch (compare_stamps(msg.stamp, d.stamp_seen)) {
      case StampOrder::kEqual:
        d.x_snapshot(msg.from) = msg.payload;
        ++d.fresh[msg.from];
        if (d.first_send_ops < 0) {
          d.first_send_ops = ops_.value();
          d.first_send_tick = k_;
        }
        break;
      case StampOrder::kOlder:
        ++d.discards;
        break;
      case StampOrder::kNewer:
        throw std::logic_error("primal snapshot stamped ahead of its dual receiver");
    }
  }
  dual_inbox_.clear();

  for (DualAgentState& d : dual_) {
    if (!gate_open(d)) continue;
    DualUpdateRecord rec;
    rec.k = k_;
    rec.c = d.index;
    rec.t_c = d.t_c;
    rec.epoch = epoch_;
    rec.mu_before = d.mu_own;
    rec.ops_at_first_send = d.first_send_ops;
    rec.first_send_tick = d.first_send_tick;
    rec.snapshot = d.x_snapshot;
    dual_update_in_place(d, p_, dual_box_, rho_);
    rec.mu_after = d.mu_own;
    dual_updates_.push_back(std::move(rec));

    MessageEvent msg;
    msg.kind = MessageEvent::Kind::kDualBroadcast;
    msg.from = d.index;
    msg.payload = d.mu_own;
    msg.stamp = {d.t_c};
    msg.send_tick = k_;
    pending_broadcasts_.push_back(std::move(msg));
  }
}

void World::update_primals() {
  ops_.next_phase();
  const long n = p_.n();
  const Box& box = p_.box();
  std::vector<std::pair<long, double>> updates;
  for (long i = 0; i < n; ++i) {
    if (!schedule_.computes(i, k_)) continue;
    const PrimalAgentState& a = primal_[i];
    if (a.t_stamp != t_ || a.entry_epoch[i] != a.epoch ||
        std::any_of(neighbors_[i].begin(), neighbors_[i].end(),
                    [&](long j) { return a.entry_epoch[j] != a.epoch; }))
      throw std::logic_error("gradient would mix blocks from different dual stamps");
    double step = a.x_local(i) - gamma_ * partial_x(p_, a.x_local, a.mu_local, i);
    updates.emplace_back(i, project_interval(step, box.lower(i), box.upper(i)));
  }
  for (auto [i, value] : updates) {
    primal_[i].x_local(i) = value;
    ops_.record_update(i);
    primal_[i].entry_version[i] = ops_.phase();
  }
  close_phase();
}

void World::close_phase() {
  if (ops_.close_phase()) ops_increments_.push_back(mark());
}

Matrix World::locals() const {
  Matrix out(p_.n(), p_.n());
  for (long i = 0; i < p_.n(); ++i) out.col(i) = primal_[i].x_local;
  return out;
}

EpochMark World::mark() const {
  EpochMark e;
  e.k = k_;
  e.epoch = epoch_;
  e.ops = ops_.value();
  e.t = t_;
  e.mu = primal_.empty() ? Vector::Zero(p_.m()) : primal_.front().mu_local;
  e.x_local = locals();
  return e;
}

long World::total_discards() const {
  long total = 0;
  for (const auto& a : primal_) total += a.discards;
  for (const auto& d : dual_) total += d.discards;
  return total;
}

Vector World::own_blocks() const {
  Vector x(p_.n());
  for (long i = 0; i < p_.n(); ++i) x(i) = primal_[i].x_local(i);
  return x;
}

TraceRow World::snapshot_row() const {
  TraceRow row;
  row.k = k_;
  row.ops = ops_.value();
  row.epoch = epoch_;
  row.t = t_;
  row.x_own = own_blocks();
  row.mu = primal_.empty() ? Vector::Zero(p_.m()) : primal_.front().mu_local;
  if (opts_.record_locals) row.x_local = locals();
  row.discards = total_discards();
  row.messages = messages_;
  return row;
}

World tick(World world) {
  world.advance();
  return world;
}

// ---------------------------------------------------------------------------

void attach_reference(Trace& trace, const ConvexProblem& p, const Vector& x_ref,
                      const Vector& mu_ref, double conv_tol) {
  require(x_ref.size() == p.n() && mu_ref.size() == p.m(),
          "attach_reference: reference dimension mismatch");
  double x_norm = x_ref.norm();
  for (TraceRow& row : trace.rows) {
    double diff = (row.x_own - x_ref).norm();
    row.rel_primal_err = x_norm > 0.0 ? diff / x_norm : diff;
    row.dual_err_sq = (row.mu - mu_ref).array().square().matrix();
    Vector g = p.constraints().value(row.x_own);
    row.constraint_violation_max = p.m() > 0 ? std::max(0.0, g.maxCoeff()) : 0.0;
  }
  if (!trace.rows.empty()) {
    const TraceRow& last = trace.rows.back();
    double dist = (last.x_own - x_ref).cwiseAbs().maxCoeff();
    if (p.m() > 0) dist = std::max(dist, (last.mu - mu_ref).cwiseAbs().maxCoeff());
    trace.converged = dist < conv_tol;
  }
}

Trace run(const ConvexProblem& p, const DualBox& dual_box, const Schedule& schedule,
          double gamma, double rho, long ticks, const RunOptions& opts, const Vector* x_ref,
          const Vector* mu_ref) {
  require(ticks >= 0, "run: ticks must be nonnegative");
  Schedule sched = schedule;
  if (sched.horizon <= 0) sched.horizon = ticks;
  World world(p, dual_box, std::move(sched), gamma, rho, opts.sim);

  Trace trace;
  trace.n = p.n();
  trace.m = p.m();
  trace.seed = opts.seed;
  trace.comm_prob = opts.comm_prob;
  trace.beta_scale = opts.beta_scale;
  trace.rows.reserve(ticks + 1);
  trace.rows.push_back(world.snapshot_row());
  for (long k = 0; k < ticks; ++k) {
    world.advance();
    trace.rows.push_back(world.snapshot_row());
  }
  trace.dual_updates = world.dual_updates();
  trace.epoch_starts = world.epoch_starts();
  trace.ops_increments = world.ops_increments();
  trace.relevant.resize(p.n());
  for (long i = 0; i < p.n(); ++i) {
    trace.relevant[i] = world.neighbors()[i];
    trace.relevant[i].push_back(i);
    std::sort(trace.relevant[i].begin(), trace.relevant[i].end());
  }
  if (x_ref && mu_ref) attach_reference(trace, p, *x_ref, *mu_ref, opts.conv_tol);
  return trace;
}

}  // namespace apd
