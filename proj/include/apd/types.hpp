#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace apd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box X = [lower_1, upper_1] x ... x [lower_n, upper_n].
struct Box {
  Vector lower;
  Vector upper;

  Eigen::Index size() const { return lower.size(); }
  bool contains(const Vector& x) const;
  /// Max-norm diameter, max_i (upper_i - lower_i).
  double diameter() const;
  Vector midpoint() const { return 0.5 * (lower + upper); }
};

/// The compact dual set M as a per-component box M_c = [0, radius].
struct DualBox {
  enum class Provenance { kSlater, kUserSupplied };

  double radius = 0.0;
  Provenance provenance = Provenance::kUserSupplied;

  bool contains(const Vector& mu) const {
    return (mu.array() >= 0.0).all() && (mu.array() <= radius).all();
  }
};

/// Malformed input: dimension mismatches, bad parameters.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A step size violates its admissibility condition.
class StepSizeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Slater's condition could not be established at the supplied point.
class SlaterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

}  // namespace apd
