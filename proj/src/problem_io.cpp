#include "apd/problem_io.hpp"

#include <fstream>

namespace apd {

using nlohmann::json;

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  require(j.is_array() && static_cast<Eigen::Index>(j.size()) == rows,
          "matrix has the wrong number of rows");
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[i];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols,
            "matrix row has the wrong length");
    for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = row[k].get<double>();
  }
  return M;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j, Eigen::Index size) {
  require(j.is_array() && static_cast<Eigen::Index>(j.size()) == size,
          "vector has the wrong length");
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[i].get<double>();
  return v;
}

json problem_to_json(const ConvexProblem& p) {
  auto g = std::dynamic_pointer_cast<const AffineConstraints>(p.constraints_ptr());
  if (!g) throw InputError("problem_to_json: only affine constraints are serializable");
  json out;
  out["n"] = p.n();
  out["m"] = p.m();
  if (auto h = std::dynamic_pointer_cast<const QuarticPairwise>(p.objective_ptr())) {
    out["family"] = "quartic_pairwise";
    out["coefficients"] = {
        {"quartic", h->quartic()}, {"pairwise", h->pairwise()}, {"scale", h->scale()}};
  } else if (auto q = std::dynamic_pointer_cast<const Quadratic>(p.objective_ptr())) {
    out["family"] = "quadratic";
    out["coefficients"] = {
        {"Q", matrix_to_json(q->Q())}, {"r", vector_to_json(q->r())}, {"scale", q->scale()}};
  } else {
    throw InputError("problem_to_json: callback objectives are not serializable");
  }
  out["A"] = matrix_to_json(g->A());
  out["b"] = vector_to_json(g->b());
  out["box_lower"] = vector_to_json(p.box().lower);
  out["box_upper"] = vector_to_json(p.box().upper);
  out["delta"] = p.delta();
  return out;
}

ConvexProblem problem_from_json(const json& j) {
  try {
    const Eigen::Index n = j.at("n").get<Eigen::Index>();
    const Eigen::Index m = j.at("m").get<Eigen::Index>();
    require(n >= 1 && m >= 0, "problem: n must be positive and m nonnegative");
    const std::string family = j.at("family").get<std::string>();
    const json& coef = j.at("coefficients");
    std::shared_ptr<const Objective> h;
    double scale = coef.value("scale", 1.0);
    if (family == "quartic_pairwise") {
      h = std::make_shared<QuarticPairwise>(n, coef.at("quartic").get<double>(),
                                            coef.at("pairwise").get<double>(), scale);
    } else if (family == "quadratic") {
      h = std::make_shared<Quadratic>(matrix_from_json(coef.at("Q"), n, n),
                                      vector_from_json(coef.at("r"), n), scale);
    } else {
      throw InputError("problem: unknown family '" + family + "'");
    }
    auto g = std::make_shared<AffineConstraints>(matrix_from_json(j.at("A"), m, n),
                                                 vector_from_json(j.at("b"), m));
    Box box{vector_from_json(j.at("box_lower"), n), vector_from_json(j.at("box_upper"), n)};
    return ConvexProblem(std::move(h), std::move(g), std::move(box),
                         j.at("delta").get<double>());
  } catch (const json::exception& e) {
    throw InputError(std::string("problem: ") + e.what());
  }
}

ConvexProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("problem file " + path + ": " + e.what());
  }
  return problem_from_json(j);
}

void save_problem(const std::string& path, const ConvexProblem& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << problem_to_json(p).dump(2) << '\n';
}

}  // namespace apd
