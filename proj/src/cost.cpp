#include "lqrm/cost.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace lqrm {

namespace {

SolveMethod resolve_method(const SolveOptions& opts, int n) {
  if (opts.method != SolveMethod::auto_select) return opts.method;
  return n <= opts.auto_threshold_dim ? SolveMethod::direct_vectorized : SolveMethod::fixed_point;
}

Matrix solve_lyapunov_unchecked(const SecondMomentOperator& op, const Matrix& rhs, bool adjoint,
                                const SolveOptions& opts) {
  if (resolve_method(opts, op.dim()) == SolveMethod::direct_vectorized)
    return detail::direct_lyapunov(op, rhs, adjoint);
  Matrix X;
  if (!detail::fixed_point_lyapunov(op, rhs, adjoint, opts.tolerance, opts.max_iterations, X))
    throw NoConvergenceError("generalized Lyapunov fixed point: iteration cap exceeded");
  return 0.5 * (X + X.transpose());
}

// R_K = R + B'P B + sum_j beta_j B_j'P B_j, the bracketed factor of the gradient.
Matrix effective_input_weight(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                              const Matrix& P) {
  Matrix RK = cost.R + sys.B().transpose() * P * sys.B();
  for (const auto& t : sys.input_noise())
    RK.noalias() += t.variance * (t.direction.transpose() * P * t.direction);
  return RK;
}

Matrix gradient_from_solutions(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                               const Gain& K, const Matrix& P, const Matrix& Sigma) {
  const Matrix RK = effective_input_weight(sys, cost, P);
  return 2.0 * (RK * K.K + sys.B().transpose() * P * sys.A()) * Sigma;
}

struct StableEval {
  Matrix P, Sigma;
  double J;
};

// Throws NotStabilizingError when the gain is infeasible.
StableEval solve_pair(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Gain& K,
                      const SolveOptions& opts) {
  SecondMomentOperator op(sys, K);
  const double radius = detail::operator_radius(op, opts.auto_threshold_dim);
  if (radius >= 1.0) throw NotStabilizingError(radius);
  StableEval ev;
  ev.P = solve_lyapunov_unchecked(op, cost.Q + K.K.transpose() * cost.R * K.K, /*adjoint=*/true,
                                  opts);
  ev.Sigma = solve_lyapunov_unchecked(op, cost.Sigma0, /*adjoint=*/false, opts);
  ev.J = (ev.P * cost.Sigma0).trace();
  return ev;
}

}  // namespace

CostEval lqrm_cost(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Gain& K,
                   const SolveOptions& opts) {
  CostEval eval;
  try {
    StableEval ev = solve_pair(sys, cost, K, opts);
    eval.J = ev.J;
    eval.stable = true;
    eval.P_K = std::move(ev.P);
    eval.Sigma_K = std::move(ev.Sigma);
  } catch (const NotStabilizingError&) {
    eval.J = std::numeric_limits<double>::infinity();
    eval.stable = false;
  }
  return eval;
}

Matrix lqrm_gradient(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Gain& K,
                     const SolveOptions& opts) {
  const StableEval ev = solve_pair(sys, cost, K, opts);
  return gradient_from_solutions(sys, cost, K, ev.P, ev.Sigma);
}

Matrix fd_gradient(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Gain& K,
                   double epsilon, ExecPolicy policy) {
  const int m = sys.input_dim();
  const int n = sys.state_dim();
  if (epsilon <= 0.0) epsilon = 1e-6 * (1.0 + K.K.norm());
  Matrix grad(m, n);
  std::atomic<bool> infeasible{false};

  auto entry = [&](int i, int j) {
    Matrix Kp = K.K, Km = K.K;
    Kp(i, j) += epsilon;
    Km(i, j) -= epsilon;
    const CostEval jp = lqrm_cost(sys, cost, Gain(Kp));
    const CostEval jm = lqrm_cost(sys, cost, Gain(Km));
    if (!jp.stable || !jm.stable) {
      infeasible = true;
      return;
    }
    grad(i, j) = (jp.J - jm.J) / (2.0 * epsilon);
  };

  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) entry(i, j);
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) entry(i, j);
  }
  if (infeasible)
    throw std::runtime_error(
        "fd_gradient: a perturbed gain is not mean-square stabilizing; use a smaller epsilon");
  return grad;
}

Matrix natural_gradient_step(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                             const Gain& K) {
  const StableEval ev = solve_pair(sys, cost, K, {});
  const Matrix grad = gradient_from_solutions(sys, cost, K, ev.P, ev.Sigma);
  Eigen::LLT<Matrix> llt(ev.Sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("natural_gradient_step: Sigma_K is singular");
  return llt.solve(grad.transpose()).transpose();
}

Matrix gauss_newton_step(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                         const Gain& K) {
  const StableEval ev = solve_pair(sys, cost, K, {});
  const Matrix grad = gradient_from_solutions(sys, cost, K, ev.P, ev.Sigma);
  Eigen::LLT<Matrix> llt(ev.Sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gauss_newton_step: Sigma_K is singular");
  const Matrix natural = llt.solve(grad.transpose()).transpose();
  const Matrix RK = effective_input_weight(sys, cost, ev.P);
  return Eigen::LDLT<Matrix>(RK).solve(natural);
}

GradientDominationResult gradient_domination_check(const MultiplicativeNoiseSystem& sys,
                                                   const CostSpec& cost, const Gain& K,
                                                   const Gain& Kstar) {
  Eigen::SelfAdjointEigenSolver<Matrix> es_sigma0(cost.Sigma0, Eigen::EigenvaluesOnly);
  const double sigma0_min = es_sigma0.eigenvalues().minCoeff();
  if (sigma0_min <= 0.0)
    throw std::domain_error("gradient_domination_check: Sigma0 must be positive definite");
  Eigen::SelfAdjointEigenSolver<Matrix> es_r(cost.R, Eigen::EigenvaluesOnly);
  const double r_min = es_r.eigenvalues().minCoeff();

  const StableEval at_k = solve_pair(sys, cost, K, {});
  const StableEval at_star = solve_pair(sys, cost, Kstar, {});
  const Matrix grad = gradient_from_solutions(sys, cost, K, at_k.P, at_k.Sigma);

  Eigen::SelfAdjointEigenSolver<Matrix> es_sk(at_star.Sigma, Eigen::EigenvaluesOnly);
  const double sigma_star_norm = es_sk.eigenvalues().cwiseAbs().maxCoeff();

  GradientDominationResult result;
  result.lhs = at_k.J - at_star.J;
  result.rhs = sigma_star_norm / (4.0 * r_min * sigma0_min * sigma0_min) * grad.squaredNorm();
  result.holds = result.lhs <= result.rhs + 1e-9;
  return result;
}

}  // namespace lqrm
