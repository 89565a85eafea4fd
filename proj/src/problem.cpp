#include "apd/problem.hpp"

#include <cmath>
#include <random>

namespace apd {

bool Box::contains(const Vector& x) const {
  return x.size() == size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

double Box::diameter() const { return size() == 0 ? 0.0 : (upper - lower).maxCoeff(); }

// ---------------------------------------------------------------------------
// QuarticPairwise

QuarticPairwise::QuarticPairwise(Eigen::Index n, double quartic, double pairwise, double scale)
    : n_(n), quartic_(quartic), pairwise_(pairwise), scale_(scale) {
  require(n >= 1, "QuarticPairwise: n must be positive");
  require(quartic >= 0 && pairwise >= 0 && scale > 0,
          "QuarticPairwise: coefficients must be nonnegative and scale positive");
}

double QuarticPairwise::value(const Vector& x) const {
  require(x.size() == n_, "QuarticPairwise::value: dimension mismatch");
  double quart = x.array().pow(4).sum();
  // sum_{i != j} (x_i - x_j)^2 = 2 n |x|^2 - 2 (sum x)^2
  double s = x.sum();
  double pair = 2.0 * static_cast<double>(n_) * x.squaredNorm() - 2.0 * s * s;
  return scale_ * (quartic_ * quart + pairwise_ * pair);
}

Vector QuarticPairwise::gradient(const Vector& x) const {
  require(x.size() == n_, "QuarticPairwise::gradient: dimension mismatch");
  Vector grad(n_);
  for (Eigen::Index i = 0; i < n_; ++i) grad(i) = partial(x, i);
  return grad;
}

double QuarticPairwise::partial(const Vector& x, Eigen::Index i) const {
  // d/dx_i of the ordered double sum counts each pair twice: 4 w sum_{j != i} (x_i - x_j).
  double xi = x(i);
  double coupling = 0.0;
  for (Eigen::Index j = 0; j < n_; ++j) coupling += xi - x(j);
  return scale_ * (4.0 * quartic_ * xi * xi * xi + 4.0 * pairwise_ * coupling);
}

Matrix QuarticPairwise::hessian(const Vector& x) const {
  require(x.size() == n_, "QuarticPairwise::hessian: dimension mismatch");
  Matrix H = Matrix::Constant(n_, n_, -4.0 * pairwise_ * scale_);
  double diag_pair = 4.0 * pairwise_ * static_cast<double>(n_ - 1);
  for (Eigen::Index i = 0; i < n_; ++i)
    H(i, i) = scale_ * (12.0 * quartic_ * x(i) * x(i) + diag_pair);
  return H;
}

std::optional<AbsHessianEnclosure> QuarticPairwise::abs_hessian_enclosure(const Box& box) const {
  require(box.size() == n_, "QuarticPairwise: box dimension mismatch");
  // Diagonal 12 a x_i^2 + const is monotone in |x_i|; off-diagonals are constant.
  AbsHessianEnclosure enc;
  double off = 4.0 * pairwise_ * scale_;
  enc.lo = Matrix::Constant(n_, n_, off);
  enc.hi = enc.lo;
  enc.witness.resize(n_);
  double diag_pair = 4.0 * pairwise_ * static_cast<double>(n_ - 1);
  for (Eigen::Index i = 0; i < n_; ++i) {
    double lo = box.lower(i);
    double hi = box.upper(i);
    double at_min = lo > 0.0 ? lo : (hi < 0.0 ? hi : 0.0);
    double max_sq = std::max(lo * lo, hi * hi);
    enc.witness(i) = at_min;
    enc.lo(i, i) = scale_ * (12.0 * quartic_ * at_min * at_min + diag_pair);
    enc.hi(i, i) = scale_ * (12.0 * quartic_ * max_sq + diag_pair);
  }
  return enc;
}

bool QuarticPairwise::nonnegative_on(const Box&) const { return true; }

// ---------------------------------------------------------------------------
// Quadratic

Quadratic::Quadratic(Matrix Q, Vector r, double scale)
    : Q_(std::move(Q)), r_(std::move(r)), scale_(scale) {
  require(Q_.rows() == Q_.cols(), "Quadratic: Q must be square");
  require(r_.size() == Q_.rows(), "Quadratic: r dimension mismatch");
  require((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + Q_.cwiseAbs().maxCoeff()),
          "Quadratic: Q must be symmetric");
  require(scale > 0, "Quadratic: scale must be positive");
}

double Quadratic::value(const Vector& x) const {
  require(x.size() == dim(), "Quadratic::value: dimension mismatch");
  return scale_ * (0.5 * x.dot(Q_ * x) + r_.dot(x));
}

Vector Quadratic::gradient(const Vector& x) const {
  require(x.size() == dim(), "Quadratic::gradient: dimension mismatch");
  Vector grad(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) grad(i) = partial(x, i);
  return grad;
}

double Quadratic::partial(const Vector& x, Eigen::Index i) const {
  return scale_ * (Q_.row(i).dot(x) + r_(i));
}

Matrix Quadratic::hessian(const Vector& x) const {
  require(x.size() == dim(), "Quadratic::hessian: dimension mismatch");
  return scale_ * Q_;
}

std::optional<AbsHessianEnclosure> Quadratic::abs_hessian_enclosure(const Box& box) const {
  AbsHessianEnclosure enc;
  enc.lo = scale_ * Q_.cwiseAbs();
  enc.hi = enc.lo;
  enc.witness = box.midpoint();
  return enc;
}

// ---------------------------------------------------------------------------
// AffineConstraints

AffineConstraints::AffineConstraints(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
  require(A_.rows() == b_.size(), "AffineConstraints: A rows must match b");
}

Vector AffineConstraints::value(const Vector& x) const {
  require(x.size() == A_.cols(), "AffineConstraints::value: dimension mismatch");
  Vector out(A_.rows());
  for (Eigen::Index c = 0; c < A_.rows(); ++c) out(c) = component(x, c);
  return out;
}

double AffineConstraints::component(const Vector& x, Eigen::Index c) const {
  return A_.row(c).dot(x) - b_(c);
}

double AffineConstraints::weighted_partial(const Vector&, const Vector& mu, Eigen::Index i) const {
  return A_.col(i).dot(mu);
}

Matrix AffineConstraints::hessian(const Vector&, Eigen::Index) const {
  return Matrix::Zero(A_.cols(), A_.cols());
}

std::optional<double> AffineConstraints::gradient_max_bound(const Box&, Eigen::Index c) const {
  return A_.row(c).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// ConvexProblem

ConvexProblem::ConvexProblem(std::shared_ptr<const Objective> h,
                             std::shared_ptr<const Constraints> g, Box box, double delta)
    : h_(std::move(h)), g_(std::move(g)), box_(std::move(box)), delta_(delta) {
  require(h_ != nullptr && g_ != nullptr, "ConvexProblem: objective and constraints required");
  require(box_.lower.size() == box_.upper.size(), "ConvexProblem: box bound sizes differ");
  require(h_->dim() == box_.size() && g_->dim() == box_.size(),
          "ConvexProblem: objective/constraint/box dimensions differ");
  require((box_.lower.array() <= box_.upper.array()).all(),
          "ConvexProblem: box lower bound exceeds upper bound");
  require(box_.lower.allFinite() && box_.upper.allFinite(), "ConvexProblem: box must be compact");
  require(delta_ > 0.0, "ConvexProblem: delta must be positive");
}

ConvexProblem ConvexProblem::with_delta(double delta) const {
  return ConvexProblem(h_, g_, box_, delta);
}

namespace {

class ScaledObjective final : public Objective {
 public:
  ScaledObjective(std::shared_ptr<const Objective> inner, double factor)
      : inner_(std::move(inner)), factor_(factor) {}

  Eigen::Index dim() const override { return inner_->dim(); }
  double value(const Vector& x) const override { return factor_ * inner_->value(x); }
  Vector gradient(const Vector& x) const override { return factor_ * inner_->gradient(x); }
  double partial(const Vector& x, Eigen::Index i) const override {
    return factor_ * inner_->partial(x, i);
  }
  Matrix hessian(const Vector& x) const override { return factor_ * inner_->hessian(x); }
  std::optional<AbsHessianEnclosure> abs_hessian_enclosure(const Box& box) const override {
    auto enc = inner_->abs_hessian_enclosure(box);
    if (enc) {
      enc->lo *= factor_;
      enc->hi *= factor_;
    }
    return enc;
  }
  bool nonnegative_on(const Box& box) const override { return inner_->nonnegative_on(box); }

 private:
  std::shared_ptr<const Objective> inner_;
  double factor_;
};

}  // namespace

ConvexProblem ConvexProblem::with_scaled_objective(double factor) const {
  require(factor > 0.0, "with_scaled_objective: factor must be positive");
  std::shared_ptr<const Objective> scaled;
  if (auto* q = dynamic_cast<const QuarticPairwise*>(h_.get())) {
    scaled = std::make_shared<QuarticPairwise>(q->dim(), q->quartic(), q->pairwise(),
                                               q->scale() * factor);
  } else if (auto* quad = dynamic_cast<const Quadratic*>(h_.get())) {
    scaled = std::make_shared<Quadratic>(quad->Q(), quad->r(), quad->scale() * factor);
  } else {
    scaled = std::make_shared<ScaledObjective>(h_, factor);
  }
  return ConvexProblem(std::move(scaled), g_, box_, delta_);
}

// ---------------------------------------------------------------------------
// Lagrangian

namespace {

void check_dims(const ConvexProblem& p, const Vector& x, const Vector& mu, const char* who) {
  if (x.size() != p.n() || mu.size() != p.m())
    throw InputError(std::string(who) + ": dimension mismatch");
}

}  // namespace

double eval_lagrangian(const ConvexProblem& p, const Vector& x, const Vector& mu) {
  check_dims(p, x, mu, "eval_lagrangian");
  return p.objective().value(x) + mu.dot(p.constraints().value(x)) -
         0.5 * p.delta() * mu.squaredNorm();
}

Vector grad_x(const ConvexProblem& p, const Vector& x, const Vector& mu) {
  check_dims(p, x, mu, "grad_x");
  // Same per-coordinate arithmetic as partial_x, so block-wise and full-vector
  // evaluations agree bit for bit.
  Vector grad = p.objective().gradient(x);
  const Constraints& g = p.constraints();
  if (g.affine()) {
    for (Eigen::Index i = 0; i < p.n(); ++i) grad(i) += g.weighted_partial(x, mu, i);
  } else {
    Matrix J = g.jacobian(x);
    for (Eigen::Index i = 0; i < p.n(); ++i) grad(i) += J.col(i).dot(mu);
  }
  return grad;
}

double partial_x(const ConvexProblem& p, const Vector& x, const Vector& mu, Eigen::Index i) {
  check_dims(p, x, mu, "partial_x");
  return p.objective().partial(x, i) + p.constraints().weighted_partial(x, mu, i);
}

Vector grad_mu(const ConvexProblem& p, const Vector& x, const Vector& mu) {
  check_dims(p, x, mu, "grad_mu");
  return p.constraints().value(x) - p.delta() * mu;
}

Matrix hessian_x(const ConvexProblem& p, const Vector& x, const Vector& mu) {
  check_dims(p, x, mu, "hessian_x");
  Matrix H = p.objective().hessian(x);
  if (!p.constraints().affine()) {
    for (Eigen::Index c = 0; c < p.m(); ++c)
      if (mu(c) != 0.0) H += mu(c) * p.constraints().hessian(x, c);
  }
  return H;
}

std::optional<AbsHessianEnclosure> lagrangian_abs_enclosure(const ConvexProblem& p,
                                                            const Box& box) {
  if (!p.constraints().affine()) return std::nullopt;
  return p.objective().abs_hessian_enclosure(box);
}

// ---------------------------------------------------------------------------

ConvexProblem benchmark_problem(double beta_scale) {
  constexpr Eigen::Index n = 10;
  constexpr Eigen::Index m = 6;
  Matrix A(m, n);
  // clang-format off
  A << -1, 0, -3, 0,  0, 4, 0, 0, 10,  0,
        0, 1,  5, 1,  1, 0, 0, 2,  0,  5,
        0, 0,  1, 1, -5, 1, 4, 0,  0,  0,
        0, 0, -2, 0,  0, 8, 1, 1, -3,  1,
        0, 0,  0, 0, -3, 0, 1, 1,  1,  0,
        0, 4,  0, 0,  0, 0, 0, 2,  1, -4;
  // clang-format on
  Vector b(m);
  b << -2, 4, -10, 5, 1, 8;
  Box box{Vector::Constant(n, 1.0), Vector::Constant(n, 10.0)};
  auto h = std::make_shared<QuarticPairwise>(n, 1.0, 1.0 / 20.0, beta_scale);
  auto g = std::make_shared<AffineConstraints>(std::move(A), std::move(b));
  return ConvexProblem(std::move(h), std::move(g), std::move(box), 0.001);
}

ConvexProblem random_dominant_quadratic(Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                                        double beta, double delta) {
  require(n >= 1 && m >= 0, "random_dominant_quadratic: bad dimensions");
  require(beta > 0, "random_dominant_quadratic: beta must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::bernoulli_distribution coupled(0.5);
  Matrix Q = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (coupled(rng)) Q(i, j) = Q(j, i) = unit(rng);
  for (Eigen::Index i = 0; i < n; ++i)
    Q(i, i) = Q.row(i).cwiseAbs().sum() + beta + 0.5 * (1.0 + unit(rng));
  Vector r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = 3.0 * unit(rng);
  Matrix A(m, n);
  for (Eigen::Index c = 0; c < m; ++c)
    for (Eigen::Index j = 0; j < n; ++j) A(c, j) = unit(rng);
  Vector b(m);
  for (Eigen::Index c = 0; c < m; ++c) b(c) = 0.5 + 0.5 * (1.0 + unit(rng));
  Box box{Vector::Constant(n, -5.0), Vector::Constant(n, 5.0)};
  return ConvexProblem(std::make_shared<Quadratic>(std::move(Q), std::move(r)),
                       std::make_shared<AffineConstraints>(std::move(A), std::move(b)),
                       std::move(box), delta);
}

}  // namespace apd
