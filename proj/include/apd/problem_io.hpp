#pragma once

#include "apd/problem.hpp"

#include <json.hpp>

#include <string>

namespace apd {

/// {n, m, family, coefficients, A (row-major), b, box_lower, box_upper, delta}.
/// family is "quartic_pairwise" (coefficients {quartic, pairwise, scale}) or
/// "quadratic" (coefficients {Q (row-major), r, scale}). Constraints must be affine;
/// callback problems are not serializable and raise InputError.
nlohmann::json problem_to_json(const ConvexProblem& p);
ConvexProblem problem_from_json(const nlohmann::json& j);

ConvexProblem load_problem(const std::string& path);
void save_problem(const std::string& path, const ConvexProblem& p);

/// Row-major nested arrays.
nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j, Eigen::Index size);

}  // namespace apd
