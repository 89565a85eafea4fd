#include "apd/audit.hpp"

#include "apd/rates.hpp"
#include "apd/uzawa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace apd {

FixedPointCache::FixedPointCache(ConvexProblem p, double gamma, double tol)
    : p_(std::move(p)), gamma_(gamma), tol_(tol), warm_(p_.box().midpoint()) {}

const Vector& FixedPointCache::operator()(const Vector& mu) {
  std::vector<double> key(mu.data(), mu.data() + mu.size());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  FixedPointResult r = inner_primal_fixed_point(p_, mu, gamma_, tol_, 10'000'000, &warm_);
  if (!r.converged)
    throw std::runtime_error("x*(mu) oracle did not converge (residual " +
                             std::to_string(r.residual) + ")");
  warm_ = r.x;
  return cache_.emplace(std::move(key), std::move(r.x)).first->second;
}

double local_copy_error(const Matrix& x_local, const Vector& ref,
                        const std::vector<std::vector<long>>& relevant) {
  require(x_local.cols() == static_cast<Eigen::Index>(relevant.size()),
          "local_copy_error: trace was recorded without local copies");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x_local.cols(); ++i)
    for (long j : relevant[i]) worst = std::max(worst, std::abs(x_local(j, i) - ref(j)));
  return worst;
}

PrimalEnvelopeReport primal_envelope(const Trace& trace, FixedPointCache& x_star, double q_p,
                                     double slack) {
  PrimalEnvelopeReport rep;
  rep.q_p = q_p;
  const auto& starts = trace.epoch_starts;
  std::vector<const Vector*> stars;
  for (const EpochMark& e : starts) {
    stars.push_back(&x_star(e.mu));
    rep.epoch_L.push_back(local_copy_error(e.x_local, *stars.back(), trace.relevant));
  }

  rep.worst_excess = -std::numeric_limits<double>::infinity();
  for (const TraceRow& row : trace.rows) {
    const Vector& xs = *stars.at(row.epoch);
    double bound = std::pow(q_p, static_cast<double>(row.ops)) * rep.epoch_L[row.epoch];
    double obs = local_copy_error(row.x_local, xs, trace.relevant);
    rep.bound.push_back(bound);
    rep.observed.push_back(obs);
    rep.worst_excess = std::max(rep.worst_excess, obs - bound);
    if (obs > bound + slack) ++rep.violations;
  }

  // Contraction per completed cycle, measured between consecutive cycle marks.
  std::vector<double> prev(rep.epoch_L);
  for (const EpochMark& mark : trace.ops_increments) {
    double e = local_copy_error(mark.x_local, *stars.at(mark.epoch), trace.relevant);
    double& before = prev[mark.epoch];
    if (before > 1e-8) {
      rep.max_cycle_ratio = std::max(rep.max_cycle_ratio, e / before);
      ++rep.cycles;
    }
    before = e;
  }
  return rep;
}

DualStepReport dual_one_step(const Trace& trace, FixedPointCache& x_star, const Vector& mu_hat,
                             double rho, double delta, double q_p, const Vector& M_gc,
                             double D_x, double slack) {
  DualStepReport rep;
  rep.q_d = qd(rho, delta);
  rep.worst_excess = -std::numeric_limits<double>::infinity();
  for (const DualUpdateRecord& rec : trace.dual_updates) {
    const EpochMark& start = trace.epoch_starts.at(rec.epoch);
    const Vector& xs = x_star(start.mu);
    DualStepCheck chk;
    chk.k = rec.k;
    chk.c = rec.c;
    chk.t_c = rec.t_c;
    chk.ops = rec.ops_at_first_send;
    chk.L_x = local_copy_error(start.x_local, xs, trace.relevant);
    double before = rec.mu_before - mu_hat(rec.c);
    double after = rec.mu_after - mu_hat(rec.c);
    chk.lhs = after * after;
    chk.rhs = rep.q_d * before * before +
              penalty_terms(rho, M_gc(rec.c), D_x, chk.L_x, q_p, chk.ops);
    rep.max_L_x = std::max(rep.max_L_x, chk.L_x);
    rep.worst_excess = std::max(rep.worst_excess, chk.lhs - chk.rhs);
    if (chk.lhs > chk.rhs + slack) ++rep.violations;
    rep.checks.push_back(chk);
  }
  return rep;
}

DualAsymptoteReport dual_asymptote(const Trace& trace, const Vector& mu0, const Vector& mu_hat,
                                   double rho, double delta, const Vector& M_gc, double D_x,
                                   double L_x, double tail_fraction, double slack) {
  const long m = mu_hat.size();
  DualAsymptoteReport rep;
  rep.q_d = qd(rho, delta);
  rep.p_max.resize(m);
  rep.asymptote.resize(m);
  rep.limsup.resize(m);
  rep.envelope_worst_excess = -std::numeric_limits<double>::infinity();
  rep.holds = true;
  for (long c = 0; c < m; ++c) {
    rep.p_max(c) = worst_case_penalty(rho, M_gc(c), D_x, L_x);
    rep.asymptote(c) = rep.p_max(c) / (1.0 - rep.q_d);
    double e0 = (mu0(c) - mu_hat(c)) * (mu0(c) - mu_hat(c));

    std::vector<double> errs;
    for (const DualUpdateRecord& rec : trace.dual_updates) {
      if (rec.c != c) continue;
      double err = (rec.mu_after - mu_hat(c)) * (rec.mu_after - mu_hat(c));
      double env = dual_envelope(e0, rep.q_d, rep.p_max(c), rec.t_c);
      rep.envelope_worst_excess = std::max(rep.envelope_worst_excess, err - env);
      if (err > env + slack) ++rep.envelope_violations;
      errs.push_back(err);
    }
    if (errs.empty()) {
      rep.limsup(c) = e0;
    } else {
      auto first = static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * errs.size()));
      first = std::min(first, errs.size() - 1);
      rep.limsup(c) = *std::max_element(errs.begin() + first, errs.end());
    }
    if (rep.limsup(c) > rep.asymptote(c) + slack) rep.holds = false;
  }
  if (rep.envelope_violations > 0) rep.holds = false;
  return rep;
}

namespace {

struct FitSample {
  double a;  // q_p^ops
  double b;  // |mu - mu_hat|_2
  double y;  // |x^i - x_hat|_2 over relevant entries
  long row;
  long agent;
};

}  // namespace

OverallFit fit_overall_envelope(const Trace& trace, const Vector& x_hat, const Vector& mu_hat,
                                double q_p) {
  std::vector<FitSample> s;
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    const TraceRow& row = trace.rows[r];
    require(row.x_local.cols() == trace.n, "fit_overall_envelope: local copies not recorded");
    double a = std::pow(q_p, static_cast<double>(row.ops));
    double b = (row.mu - mu_hat).norm();
    for (long i = 0; i < trace.n; ++i) {
      double y2 = 0.0;
      for (long j : trace.relevant[i]) {
        double d = row.x_local(j, i) - x_hat(j);
        y2 += d * d;
      }
      s.push_back({a, b, std::sqrt(y2), static_cast<long>(r), i});
    }
  }
  OverallFit fit;
  fit.samples = static_cast<long>(s.size());
  if (s.empty()) {
    fit.holds = true;
    return fit;
  }

  // Two-variable nonnegative least squares: interior solution or one active bound.
  double saa = 0, sab = 0, sbb = 0, say = 0, sby = 0, syy = 0;
  for (const auto& v : s) {
    saa += v.a * v.a;
    sab += v.a * v.b;
    sbb += v.b * v.b;
    say += v.a * v.y;
    sby += v.b * v.y;
    syy += v.y * v.y;
  }
  auto sse = [&](double k1, double k2) {
    return syy + k1 * k1 * saa + k2 * k2 * sbb + 2 * k1 * k2 * sab - 2 * k1 * say - 2 * k2 * sby;
  };
  double best = sse(0, 0);
  double det = saa * sbb - sab * sab;
  if (det > 1e-300) {
    double k1 = (say * sbb - sby * sab) / det;
    double k2 = (sby * saa - say * sab) / det;
    if (k1 >= 0 && k2 >= 0 && sse(k1, k2) < best) {
      best = sse(k1, k2);
      fit.K1_ls = k1;
      fit.K2_ls = k2;
    }
  }
  if (saa > 0) {
    double k1 = std::max(0.0, say / saa);
    if (sse(k1, 0) < best) {
      best = sse(k1, 0);
      fit.K1_ls = k1;
      fit.K2_ls = 0;
    }
  }
  if (sbb > 0) {
    double k2 = std::max(0.0, sby / sbb);
    if (sse(0, k2) < best) {
      best = sse(0, k2);
      fit.K1_ls = 0;
      fit.K2_ls = k2;
    }
  }

  // Feasibility: K1 a + K2 b >= y for all samples, K1, K2 >= 0. For fixed K2 the
  // smallest K1 is a max of affine functions, so K1(K2) + K2 is convex in K2.
  double k2_lo = 0.0, k2_hi = 0.0;
  for (const auto& v : s) {
    if (v.a > 0) continue;
    if (v.b > 0) {
      k2_lo = std::max(k2_lo, v.y / v.b);
    } else if (v.y > 0) {
      fit.holds = false;
      fit.worst_row = v.row;
      fit.worst_agent = v.agent;
      return fit;
    }
  }
  for (const auto& v : s)
    if (v.b > 0) k2_hi = std::max(k2_hi, v.y / v.b);
  k2_hi = std::max(k2_hi, k2_lo);
  auto k1_for = [&](double k2) {
    double k1 = 0.0;
    for (const auto& v : s)
      if (v.a > 0) k1 = std::max(k1, (v.y - k2 * v.b) / v.a);
    return k1;
  };
  double lo = k2_lo, hi = k2_hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (k1_for(m1) + m1 <= k1_for(m2) + m2)
      hi = m2;
    else
      lo = m1;
  }
  fit.K2 = 0.5 * (lo + hi);
  fit.K1 = k1_for(fit.K2);
  if (k1_for(0.0) <= fit.K1 + fit.K2 && k2_lo == 0.0) {
    fit.K2 = 0.0;
    fit.K1 = k1_for(0.0);
  }

  fit.holds = true;
  double min_slack = std::numeric_limits<double>::infinity();
  for (const auto& v : s) {
    double slack = fit.K1 * v.a + fit.K2 * v.b - v.y;
    if (slack < min_slack) {
      min_slack = slack;
      fit.worst_row = v.row;
      fit.worst_agent = v.agent;
    }
    if (slack < -1e-12 * std::max(1.0, v.y)) fit.holds = false;
  }
  return fit;
}

}  // namespace apd
