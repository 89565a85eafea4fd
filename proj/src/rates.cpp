#include "apd/rates.hpp"

#include <cmath>
#include <random>

namespace apd {

double qp(double gamma, double beta) {
  if (!(beta > 0.0)) throw StepSizeError("qp: beta must be positive");
  if (!(gamma > 0.0)) throw StepSizeError("qp: gamma must be positive");
  double q = 1.0 - gamma * beta;
  if (!(q >= 0.0 && q < 1.0))
    throw StepSizeError("qp: 1 - gamma beta = " + std::to_string(q) + " outside [0, 1)");
  return q;
}

double qd(double rho, double delta) {
  double s = 1.0 - rho * delta;
  return 3.0 * s * s;
}

bool qd_admissible(double rho, double delta) {
  auto [lo, hi] = rho_interval(delta);
  return rho > lo && rho < hi;
}

std::pair<double, double> rho_interval(double delta) {
  require(delta > 0.0, "rho_interval: delta must be positive");
  const double r3 = std::sqrt(3.0);
  return {(3.0 - r3) / (3.0 * delta), (3.0 + r3) / (3.0 * delta)};
}

double penalty_terms(double rho, double M_gc, double D_x, double L_x, double q_p, long ops) {
  double w = 2.0 * rho * rho * M_gc * M_gc;
  double decay = std::pow(q_p, static_cast<double>(ops));
  return w * D_x * D_x + w * decay * decay * L_x * L_x + w * D_x * decay * L_x;
}

double asynchrony_penalty(double rho, double M_gc, double D_x) {
  return 2.0 * rho * rho * M_gc * M_gc * D_x * D_x;
}

double worst_case_penalty(double rho, double M_gc, double D_x, double L_x) {
  return 2.0 * rho * rho * M_gc * M_gc * (D_x * D_x + L_x * L_x + D_x * L_x);
}

double dual_envelope(double mu0_err_sq, double q_d, double p_max, long t_c) {
  if (!(q_d >= 0.0 && q_d < 1.0))
    throw StepSizeError("dual_envelope: q_d = " + std::to_string(q_d) + " outside [0, 1)");
  double decay = std::pow(q_d, static_cast<double>(t_c + 1));
  return decay * mu0_err_sq + (1.0 - decay * q_d) / (1.0 - q_d) * p_max;
}

Vector constraint_gradient_bounds(const ConvexProblem& p, const SamplingOptions& sampling) {
  Vector bounds(p.m());
  bool all_closed = true;
  for (Eigen::Index c = 0; c < p.m(); ++c) {
    auto b = p.constraints().gradient_max_bound(p.box(), c);
    if (b) {
      bounds(c) = *b;
    } else {
      all_closed = false;
      bounds(c) = 0.0;
    }
  }
  if (all_closed) return bounds;

  // Sampled fallback; corners and centre plus uniform draws.
  std::mt19937_64 rng(sampling.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Box& box = p.box();
  auto absorb = [&](const Vector& x) {
    Matrix J = p.constraints().jacobian(x);
    for (Eigen::Index c = 0; c < p.m(); ++c)
      if (!p.constraints().gradient_max_bound(box, c))
        bounds(c) = std::max(bounds(c), J.row(c).cwiseAbs().maxCoeff());
  };
  absorb(box.lower);
  absorb(box.upper);
  absorb(box.midpoint());
  Vector x(p.n());
  for (int s = 0; s < sampling.max_samples; ++s) {
    for (Eigen::Index i = 0; i < p.n(); ++i)
      x(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * unit(rng);
    absorb(x);
  }
  for (Eigen::Index c = 0; c < p.m(); ++c)
    if (!p.constraints().gradient_max_bound(box, c)) bounds(c) /= sampling.safety_factor;
  return bounds;
}

RateConstants rate_constants(const ConvexProblem& p, double gamma, double rho, double beta) {
  RateConstants k;
  k.q_p = qp(gamma, beta);
  k.q_d = qd(rho, p.delta());
  k.M_gc = constraint_gradient_bounds(p);
  k.D_x = p.box().diameter();
  return k;
}

}  // namespace apd
