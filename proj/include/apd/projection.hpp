#pragma once

#include "apd/types.hpp"

namespace apd {

/// Euclidean projection onto a box: componentwise clamp.
template <typename Derived>
Vector project_box(const Eigen::MatrixBase<Derived>& x, const Box& box) {
  require(x.size() == box.size(), "project_box: dimension mismatch");
  return x.derived().cwiseMax(box.lower).cwiseMin(box.upper);
}

/// Projection of a single block onto [lower, upper].
inline double project_interval(double v, double lower, double upper) {
  return v < lower ? lower : (v > upper ? upper : v);
}

/// Projection onto M_1 x ... x M_m with every M_c = [0, radius].
template <typename Derived>
Vector project_dual(const Eigen::MatrixBase<Derived>& mu, const DualBox& box) {
  return mu.derived().cwiseMax(0.0).cwiseMin(box.radius);
}

}  // namespace apd
