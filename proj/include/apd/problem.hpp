#pragma once

#include "apd/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace apd {

/// Entrywise bounds lo(i,j) <= |H_ij| <= hi(i,j) valid over a box (and, for
/// Lagrangian Hessians, over the dual box as well).
struct AbsHessianEnclosure {
  Matrix lo;
  Matrix hi;
  /// A point of the box at which every diagonal entry attains its lower bound.
  Vector witness;
};

/// Twice continuously differentiable convex objective h : R^n -> R.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  /// d h / d x_i. Overridden by families that can avoid the full gradient.
  virtual double partial(const Vector& x, Eigen::Index i) const { return gradient(x)(i); }
  virtual Matrix hessian(const Vector& x) const = 0;

  /// Interval enclosure of |H| over `box`, when the family admits one.
  virtual std::optional<AbsHessianEnclosure> abs_hessian_enclosure(const Box&) const {
    return std::nullopt;
  }
  /// True only when h >= 0 on `box` is certified by construction.
  virtual bool nonnegative_on(const Box&) const { return false; }
};

/// Convex constraint map g : R^n -> R^m.
class Constraints {
 public:
  virtual ~Constraints() = default;

  virtual Eigen::Index dim() const = 0;
  virtual Eigen::Index count() const = 0;
  virtual Vector value(const Vector& x) const = 0;
  virtual double component(const Vector& x, Eigen::Index c) const { return value(x)(c); }
  /// Rows are the gradients of g_c.
  virtual Matrix jacobian(const Vector& x) const = 0;
  /// sum_c mu_c d g_c / d x_i.
  virtual double weighted_partial(const Vector& x, const Vector& mu, Eigen::Index i) const {
    return jacobian(x).col(i).dot(mu);
  }
  virtual Matrix hessian(const Vector& x, Eigen::Index c) const = 0;
  virtual bool affine() const { return false; }
  /// max_{x in box} ||grad g_c(x)||_max, when available in closed form.
  virtual std::optional<double> gradient_max_bound(const Box&, Eigen::Index) const {
    return std::nullopt;
  }
};

/// h(x) = scale * (quartic * sum_i x_i^4 + pairwise * sum_i sum_{j != i} (x_i - x_j)^2).
class QuarticPairwise final : public Objective {
 public:
  QuarticPairwise(Eigen::Index n, double quartic, double pairwise, double scale = 1.0);

  Eigen::Index dim() const override { return n_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double partial(const Vector& x, Eigen::Index i) const override;
  Matrix hessian(const Vector& x) const override;
  std::optional<AbsHessianEnclosure> abs_hessian_enclosure(const Box& box) const override;
  bool nonnegative_on(const Box&) const override;

  double quartic() const { return quartic_; }
  double pairwise() const { return pairwise_; }
  double scale() const { return scale_; }

 private:
  Eigen::Index n_;
  double quartic_;
  double pairwise_;
  double scale_;
};

/// h(x) = scale * (0.5 x^T Q x + r^T x).
class Quadratic final : public Objective {
 public:
  Quadratic(Matrix Q, Vector r, double scale = 1.0);

  Eigen::Index dim() const override { return Q_.rows(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double partial(const Vector& x, Eigen::Index i) const override;
  Matrix hessian(const Vector& x) const override;
  std::optional<AbsHessianEnclosure> abs_hessian_enclosure(const Box& box) const override;

  const Matrix& Q() const { return Q_; }
  const Vector& r() const { return r_; }
  double scale() const { return scale_; }

 private:
  Matrix Q_;
  Vector r_;
  double scale_;
};

/// User-supplied objective; no enclosure, so certification falls back to sampling.
class CallbackObjective final : public Objective {
 public:
  struct Functions {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
  };

  CallbackObjective(Eigen::Index n, Functions f) : n_(n), f_(std::move(f)) {}

  Eigen::Index dim() const override { return n_; }
  double value(const Vector& x) const override { return f_.value(x); }
  Vector gradient(const Vector& x) const override { return f_.gradient(x); }
  Matrix hessian(const Vector& x) const override { return f_.hessian(x); }

 private:
  Eigen::Index n_;
  Functions f_;
};

/// g(x) = A x - b.
class AffineConstraints final : public Constraints {
 public:
  AffineConstraints(Matrix A, Vector b);

  Eigen::Index dim() const override { return A_.cols(); }
  Eigen::Index count() const override { return A_.rows(); }
  Vector value(const Vector& x) const override;
  double component(const Vector& x, Eigen::Index c) const override;
  Matrix jacobian(const Vector&) const override { return A_; }
  double weighted_partial(const Vector& x, const Vector& mu, Eigen::Index i) const override;
  Matrix hessian(const Vector&, Eigen::Index) const override;
  bool affine() const override { return true; }
  std::optional<double> gradient_max_bound(const Box&, Eigen::Index c) const override;

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }

 private:
  Matrix A_;
  Vector b_;
};

class CallbackConstraints final : public Constraints {
 public:
  struct Functions {
    std::function<Vector(const Vector&)> value;
    std::function<Matrix(const Vector&)> jacobian;
    std::function<Matrix(const Vector&, Eigen::Index)> hessian;
  };

  CallbackConstraints(Eigen::Index n, Eigen::Index m, Functions f)
      : n_(n), m_(m), f_(std::move(f)) {}

  Eigen::Index dim() const override { return n_; }
  Eigen::Index count() const override { return m_; }
  Vector value(const Vector& x) const override { return f_.value(x); }
  Matrix jacobian(const Vector& x) const override { return f_.jacobian(x); }
  Matrix hessian(const Vector& x, Eigen::Index c) const override { return f_.hessian(x, c); }

 private:
  Eigen::Index n_;
  Eigen::Index m_;
  Functions f_;
};

/// minimize h(x) subject to g(x) <= 0, x in X, solved through the
/// Tikhonov-regularized Lagrangian L_delta(x, mu) = h + mu^T g - (delta/2)|mu|^2.
///
/// Immutable value type; copies share the (immutable) objective and constraints.
class ConvexProblem {
 public:
  ConvexProblem(std::shared_ptr<const Objective> h, std::shared_ptr<const Constraints> g,
                Box box, double delta);

  Eigen::Index n() const { return box_.size(); }
  Eigen::Index m() const { return g_->count(); }
  const Objective& objective() const { return *h_; }
  const Constraints& constraints() const { return *g_; }
  std::shared_ptr<const Objective> objective_ptr() const { return h_; }
  std::shared_ptr<const Constraints> constraints_ptr() const { return g_; }
  const Box& box() const { return box_; }
  double delta() const { return delta_; }

  ConvexProblem with_delta(double delta) const;
  /// Multiplies h by `factor`. Families keep their closed forms.
  ConvexProblem with_scaled_objective(double factor) const;

 private:
  std::shared_ptr<const Objective> h_;
  std::shared_ptr<const Constraints> g_;
  Box box_;
  double delta_;
};

double eval_lagrangian(const ConvexProblem& p, const Vector& x, const Vector& mu);
/// grad_x L_delta = grad h + sum_j mu_j grad g_j.
Vector grad_x(const ConvexProblem& p, const Vector& x, const Vector& mu);
/// d L_delta / d x_i; what a primal agent owning block i evaluates.
double partial_x(const ConvexProblem& p, const Vector& x, const Vector& mu, Eigen::Index i);
/// grad_mu L_delta = g(x) - delta mu.
Vector grad_mu(const ConvexProblem& p, const Vector& x, const Vector& mu);
Matrix hessian_x(const ConvexProblem& p, const Vector& x, const Vector& mu);

/// Closed-form enclosure of |grad^2_x L_delta| over `box`; available when h admits
/// one and g is affine (so mu drops out of the Hessian).
std::optional<AbsHessianEnclosure> lagrangian_abs_enclosure(const ConvexProblem& p,
                                                            const Box& box);

/// Benchmark instance: n = 10 agents, h = sum x^4 + (1/20) sum_{i != j} (x_i - x_j)^2,
/// g = A x - b with a fixed 6 x 10 matrix, X_i = [1, 10], delta = 0.001.
ConvexProblem benchmark_problem(double beta_scale = 1.0);

/// Random strictly diagonally dominant quadratic program with affine constraints:
/// sparse symmetric coupling, diagonal margin at least `beta`, X = [-5, 5]^n. The
/// constraints admit the Slater point 0 (b > 0).
ConvexProblem random_dominant_quadratic(Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                                        double beta = 0.5, double delta = 0.01);

/// Default user-supplied dual radius for the benchmark instance, which has no Slater point.
inline constexpr double kBenchmarkDualRadius = 10.0;

}  // namespace apd
