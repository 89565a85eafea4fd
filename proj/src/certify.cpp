#include "apd/certify.hpp"

#include "apd/rates.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace apd {

std::string to_string(EnclosureMethod method) {
  return method == EnclosureMethod::kIntervalBound ? "interval-bound" : "grid-sample";
}

namespace {

/// Visits sample points (x, mu) of X x [0, radius]^m.
template <typename Visit>
void for_each_sample(const ConvexProblem& p, const DualBox& dual_box,
                     const SamplingOptions& opts, Visit&& visit) {
  const Eigen::Index n = p.n();
  const Eigen::Index m = p.constraints().affine() ? 0 : p.m();
  const Eigen::Index dims = n + m;
  Vector lo(dims), hi(dims);
  lo << p.box().lower, Vector::Zero(m);
  hi << p.box().upper, Vector::Constant(m, dual_box.radius);

  auto emit = [&](const Vector& z) {
    Vector mu = Vector::Zero(p.m());
    if (m > 0) mu = z.tail(m);
    visit(Vector(z.head(n)), mu);
  };

  const int g = std::max(opts.grid_points, 2);
  double total = std::pow(static_cast<double>(g), static_cast<double>(dims));
  if (total <= opts.max_samples) {
    std::vector<int> idx(dims, 0);
    Vector z(dims);
    for (long count = 0; count < static_cast<long>(total); ++count) {
      for (Eigen::Index d = 0; d < dims; ++d)
        z(d) = lo(d) + (hi(d) - lo(d)) * idx[d] / static_cast<double>(g - 1);
      emit(z);
      for (Eigen::Index d = 0; d < dims; ++d) {
        if (++idx[d] < g) break;
        idx[d] = 0;
      }
    }
    return;
  }
  emit(lo);
  emit(hi);
  emit(0.5 * (lo + hi));
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector z(dims);
  for (int s = 0; s < opts.max_samples; ++s) {
    for (Eigen::Index d = 0; d < dims; ++d) z(d) = lo(d) + (hi(d) - lo(d)) * unit(rng);
    emit(z);
  }
}

double row_margin(const Matrix& lo_abs, const Matrix& hi_abs, Eigen::Index i) {
  return lo_abs(i, i) - (hi_abs.row(i).sum() - hi_abs(i, i));
}

}  // namespace

DominanceCertificate verify_dominance(const ConvexProblem& p, const DualBox& dual_box,
                                      const SamplingOptions& sampling) {
  require(std::isfinite(dual_box.radius) && dual_box.radius >= 0.0,
          "verify_dominance: dual box must be finite");
  DominanceCertificate cert;
  cert.beta = std::numeric_limits<double>::infinity();

  if (auto enc = lagrangian_abs_enclosure(p, p.box())) {
    cert.method = EnclosureMethod::kIntervalBound;
    for (Eigen::Index i = 0; i < p.n(); ++i) {
      double margin = row_margin(enc->lo, enc->hi, i);
      if (margin < cert.beta) {
        cert.beta = margin;
        cert.witness_row = i;
      }
    }
    cert.witness_x = enc->witness;
    cert.witness_mu = Vector::Zero(p.m());
  } else {
    cert.method = EnclosureMethod::kGridSample;
    for_each_sample(p, dual_box, sampling, [&](const Vector& x, const Vector& mu) {
      Matrix abs_h = hessian_x(p, x, mu).cwiseAbs();
      for (Eigen::Index i = 0; i < p.n(); ++i) {
        double margin = row_margin(abs_h, abs_h, i);
        if (margin < cert.beta) {
          cert.beta = margin;
          cert.witness_row = i;
          cert.witness_x = x;
          cert.witness_mu = mu;
        }
      }
    });
  }
  if (!(cert.beta > 0.0)) {
    throw CertificationError("Hessian is not diagonally dominant (margin " +
                                 std::to_string(cert.beta) + " in row " +
                                 std::to_string(cert.witness_row) + ")",
                             cert.witness_x, cert.witness_mu, cert.beta);
  }
  return cert;
}

double gamma_bound(const ConvexProblem& p, const DualBox& dual_box,
                   const SamplingOptions& sampling) {
  double max_row = 0.0;
  double factor = 1.0;
  if (auto enc = lagrangian_abs_enclosure(p, p.box())) {
    max_row = enc->hi.rowwise().sum().maxCoeff();
  } else {
    factor = sampling.safety_factor;
    for_each_sample(p, dual_box, sampling, [&](const Vector& x, const Vector& mu) {
      max_row = std::max(max_row, hessian_x(p, x, mu).cwiseAbs().rowwise().sum().maxCoeff());
    });
  }
  if (!std::isfinite(max_row) || max_row <= 0.0)
    throw CertificationError("gamma_bound: Hessian row sums are unbounded or zero",
                             Vector(), Vector(), max_row);
  return factor / max_row;
}

SlaterReport check_slater(const ConvexProblem& p, const Vector& point) {
  require(point.size() == p.n(), "check_slater: dimension mismatch");
  SlaterReport r;
  r.in_box = p.box().contains(point);
  r.g_value = p.constraints().value(point);
  r.strictly_feasible = (r.g_value.array() < 0.0).all();
  return r;
}

DualBox dual_bound(const ConvexProblem& p, const Vector& slater_point,
                   std::optional<double> h_lower) {
  SlaterReport s = check_slater(p, slater_point);
  if (!s.in_box) throw SlaterError("dual_bound: Slater point lies outside X");
  if (!s.strictly_feasible)
    throw SlaterError("dual_bound: g(slater_point) < 0 fails (max g = " +
                      std::to_string(s.g_value.maxCoeff()) + ")");
  if (!h_lower) {
    if (!p.objective().nonnegative_on(p.box()))
      throw InputError("dual_bound: h is not certified nonnegative; supply a lower bound");
    h_lower = 0.0;
  }
  double h_bar = p.objective().value(slater_point);
  require(h_bar >= *h_lower, "dual_bound: lower bound exceeds h at the Slater point");
  DualBox box;
  box.radius = (h_bar - *h_lower) / (-s.g_value).minCoeff();
  box.provenance = DualBox::Provenance::kSlater;
  return box;
}

std::optional<Vector> affine_constraint_minima(const ConvexProblem& p) {
  auto* affine = dynamic_cast<const AffineConstraints*>(&p.constraints());
  if (affine == nullptr) return std::nullopt;
  const Matrix& A = affine->A();
  Vector minima(p.m());
  for (Eigen::Index c = 0; c < p.m(); ++c) {
    double v = -affine->b()(c);
    for (Eigen::Index j = 0; j < p.n(); ++j)
      v += A(c, j) * (A(c, j) > 0 ? p.box().lower(j) : p.box().upper(j));
    minima(c) = v;
  }
  return minima;
}

ContractionMatrices build_G_F(const Matrix& H, double gamma) {
  require(H.rows() == H.cols(), "build_G_F: H must be square");
  if (!(gamma > 0.0)) throw StepSizeError("build_G_F: gamma must be positive");
  const Eigen::Index n = H.rows();
  ContractionMatrices out;
  out.G = -H.cwiseAbs();
  out.G.diagonal() = H.diagonal().cwiseAbs();
  out.F = Matrix::Identity(n, n) - gamma * out.G;
  for (Eigen::Index i = 0; i < n; ++i) {
    double g_off = out.G.row(i).cwiseAbs().sum() - out.G(i, i);
    double f_off = out.F.row(i).cwiseAbs().sum() - std::abs(out.F(i, i));
    if (!(out.G(i, i) > g_off))
      throw StepSizeError("build_G_F: G is not strictly diagonally dominant in row " +
                          std::to_string(i));
    if (!(out.F(i, i) > f_off))
      throw StepSizeError("build_G_F: gamma too large, F loses dominance in row " +
                          std::to_string(i));
  }
  return out;
}

bool positive_definite(const Matrix& M) {
  Eigen::LLT<Matrix> llt(0.5 * (M + M.transpose()));
  return llt.info() == Eigen::Success;
}

StepSizes admissible_steps(const ConvexProblem& p, double gamma, double rho, double gamma_max) {
  StepSizes s{gamma, rho, gamma_max, rho_interval(p.delta())};
  if (!(gamma > 0.0 && gamma < gamma_max))
    throw StepSizeError("gamma = " + std::to_string(gamma) + " must lie in (0, " +
                        std::to_string(gamma_max) + ")");
  if (!(rho > s.rho_interval.first && rho < s.rho_interval.second))
    throw StepSizeError("rho = " + std::to_string(rho) + " must lie in (" +
                        std::to_string(s.rho_interval.first) + ", " +
                        std::to_string(s.rho_interval.second) + ")");
  return s;
}

std::vector<std::vector<Eigen::Index>> essential_neighbors(const ConvexProblem& p,
                                                           const DualBox& dual_box,
                                                           const SamplingOptions& sampling) {
  const Eigen::Index n = p.n();
  Matrix pattern = Matrix::Zero(n, n);
  if (auto enc = lagrangian_abs_enclosure(p, p.box())) {
    pattern = enc->hi;
  } else {
    for_each_sample(p, dual_box, sampling, [&](const Vector& x, const Vector& mu) {
      pattern = pattern.cwiseMax(hessian_x(p, x, mu).cwiseAbs());
    });
  }
  std::vector<std::vector<Eigen::Index>> out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && pattern(i, j) > 0.0) out[i].push_back(j);
  return out;
}

}  // namespace apd
