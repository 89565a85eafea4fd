#include "apd/counterexample.hpp"

#include "apd/simulator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace apd {

namespace {

void check_parameters(double epsilon, double L, long n) {
  require(epsilon > 0.0, "counterexample: epsilon must be positive");
  require(L > epsilon, "counterexample: L must exceed epsilon");
  require(n >= 1, "counterexample: n must be positive");
}

Vector unclamped_argmin(const CounterexampleInstance& inst, const Vector& mu) {
  return -inst.Q.llt().solve(inst.r + inst.A.transpose() * mu);
}

}  // namespace

CounterexampleInstance counterexample_from_parts(Matrix Q, Matrix A, Vector r, Vector mu1,
                                                 Vector mu2, double epsilon, double L,
                                                 double box_halfwidth) {
  const long n = Q.rows();
  check_parameters(epsilon, L, n);
  require(Q.cols() == n && A.cols() == n && A.rows() == n && r.size() == n &&
              mu1.size() == n && mu2.size() == n,
          "counterexample: dimension mismatch");
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff()),
          "counterexample: Q must be symmetric");
  require((mu1.array() >= 0).all() && (mu2.array() >= 0).all(),
          "counterexample: multipliers must be nonnegative");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() > 0.0, "counterexample: Q must be positive definite");
  require(eig.eigenvalues().maxCoeff() < epsilon / L,
          "counterexample: lambda_max(Q) must be below epsilon / L");
  require((A * A.transpose() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12,
          "counterexample: rows of A must be orthonormal");
  require((mu1 - mu2).norm() < epsilon, "counterexample: |mu1 - mu2| must be below epsilon");

  CounterexampleInstance inst;
  inst.n = n;
  inst.m = n;
  inst.Q = std::move(Q);
  inst.A = std::move(A);
  inst.r = std::move(r);
  inst.mu1 = std::move(mu1);
  inst.mu2 = std::move(mu2);
  inst.epsilon = epsilon;
  inst.L = L;
  if (box_halfwidth <= 0.0) {
    double reach = std::max(unclamped_argmin(inst, inst.mu1).cwiseAbs().maxCoeff(),
                            unclamped_argmin(inst, inst.mu2).cwiseAbs().maxCoeff());
    box_halfwidth = 1.1 * reach + 1.0;
  }
  inst.box_halfwidth = box_halfwidth;
  return inst;
}

CounterexampleInstance build_counterexample(double epsilon, double L, long n,
                                            std::uint64_t seed) {
  check_parameters(epsilon, L, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix G(n, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix U = qr.householderQ();
  Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (long j = 0; j < n; ++j)
    if (R(j, j) < 0) U.col(j) = -U.col(j);
  Matrix V = U.transpose();  // rows orthonormal

  const double top = epsilon / L;
  const double lo = std::log(0.1 * top), hi = std::log(0.5 * top);
  Vector lambda(n);
  for (long i = 0; i < n; ++i) lambda(i) = std::exp(lo + (hi - lo) * unit(rng));
  Matrix Q = V.transpose() * lambda.asDiagonal() * V;
  Q = 0.5 * (Q + Q.transpose());

  Vector mu1(n);
  for (long i = 0; i < n; ++i) mu1(i) = epsilon * unit(rng);
  Vector e(n);
  for (long i = 0; i < n; ++i) e(i) = std::abs(gauss(rng));
  if (e.norm() == 0.0) e(0) = 1.0;
  e.normalize();
  Vector mu2 = mu1 + 0.9 * epsilon * e;

  return counterexample_from_parts(std::move(Q), std::move(V), Vector::Zero(n), std::move(mu1),
                                   std::move(mu2), epsilon, L);
}

Vector argmin_lagrangian(const CounterexampleInstance& inst, const Vector& mu) {
  require(mu.size() == inst.m, "argmin_lagrangian: dimension mismatch");
  Vector x = unclamped_argmin(inst, mu);
  if (x.cwiseAbs().maxCoeff() > inst.box_halfwidth)
    throw InputError("argmin_lagrangian: minimizer lies outside the instance box");
  return x;
}

CounterexampleReport verify_counterexample(const CounterexampleInstance& inst) {
  CounterexampleReport rep;
  Vector x1 = argmin_lagrangian(inst, inst.mu1);
  Vector x2 = argmin_lagrangian(inst, inst.mu2);
  rep.dual_gap = (inst.mu1 - inst.mu2).norm();
  rep.primal_gap = (x1 - x2).norm();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(inst.Q, Eigen::EigenvaluesOnly);
  Vector lambda = eig.eigenvalues();  // ascending
  rep.lambda_max = lambda.maxCoeff();
  Matrix M = inst.Q.llt().solve(inst.A.transpose());
  Eigen::JacobiSVD<Matrix> svd(M);
  Vector sigma = svd.singularValues();  // descending
  rep.sigma_min = sigma.minCoeff();
  // Descending sigma pairs with ascending lambda: sigma_i = 1 / lambda_i.
  for (long i = 0; i < sigma.size(); ++i) {
    double expect = 1.0 / lambda(i);
    rep.sigma_spectrum_error =
        std::max(rep.sigma_spectrum_error, std::abs(sigma(i) - expect) / expect);
  }
  rep.orthonormality_error =
      (inst.A * inst.A.transpose() - Matrix::Identity(inst.m, inst.m)).cwiseAbs().maxCoeff();
  rep.lower_bound = rep.sigma_min * rep.dual_gap;

  if (!(rep.dual_gap < inst.epsilon))
    throw VerificationError("counterexample: |mu1 - mu2| < epsilon fails");
  if (!(rep.primal_gap > inst.L))
    throw VerificationError("counterexample: |x1 - x2| > L fails");
  if (rep.primal_gap < rep.lower_bound * (1.0 - 1e-9))
    throw VerificationError("counterexample: |x1 - x2| >= sigma_min |mu1 - mu2| fails");
  return rep;
}

ConvexProblem counterexample_problem(const CounterexampleInstance& inst, double delta) {
  Box box{Vector::Constant(inst.n, -inst.box_halfwidth),
          Vector::Constant(inst.n, inst.box_halfwidth)};
  return ConvexProblem(std::make_shared<Quadratic>(inst.Q, inst.r),
                       std::make_shared<AffineConstraints>(inst.A, Vector::Zero(inst.m)),
                       std::move(box), delta);
}

DivergenceDemo demo_divergence(const CounterexampleInstance& inst, const Schedule& schedule,
                               long ticks) {
  DivergenceDemo demo;
  ConvexProblem p = counterexample_problem(inst);
  Matrix absQ = inst.Q.cwiseAbs();
  demo.gamma = 0.9 / absQ.rowwise().sum().maxCoeff();
  bool dominant = true;
  for (long i = 0; i < inst.n; ++i)
    if (2.0 * absQ(i, i) <= absQ.row(i).sum()) dominant = false;
  demo.used_given_schedule = dominant;
  Schedule sched = dominant ? schedule : Schedule::synchronous(ticks);

  DualBox frozen;
  frozen.radius = std::max(inst.mu1.maxCoeff(), inst.mu2.maxCoeff());
  frozen.provenance = DualBox::Provenance::kUserSupplied;

  RunOptions opts;
  opts.sim.freeze_duals = true;
  opts.sim.record_locals = false;
  opts.seed = sched.seed;
  opts.sim.x0 = Vector::Zero(inst.n);
  opts.sim.mu0 = inst.mu1;
  demo.run1 = run(p, frozen, sched, demo.gamma, 1.0, ticks, opts);
  opts.sim.mu0 = inst.mu2;
  demo.run2 = run(p, frozen, sched, demo.gamma, 1.0, ticks, opts);
  demo.terminal_gap = (demo.run1.rows.back().x_own - demo.run2.rows.back().x_own).norm();
  return demo;
}

}  // namespace apd
