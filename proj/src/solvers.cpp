#include "lqrm/solvers.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace lqrm {

namespace {

void check_dims(const MultiplicativeNoiseSystem& sys, const CostSpec& cost) {
  if (cost.Q.rows() != sys.state_dim() || cost.R.rows() != sys.input_dim() ||
      cost.Sigma0.rows() != sys.state_dim())
    throw std::invalid_argument("solver: cost dimensions do not match the system");
}

Matrix solve_generalized_lyapunov(const SecondMomentOperator& op, const Matrix& rhs, bool adjoint,
                                  const SolveOptions& opts) {
  const double radius = detail::operator_radius(op, opts.auto_threshold_dim);
  if (radius >= 1.0) throw NotStabilizingError(radius);
  SolveMethod method = opts.method;
  if (method == SolveMethod::auto_select)
    method = op.dim() <= opts.auto_threshold_dim ? SolveMethod::direct_vectorized
                                                 : SolveMethod::fixed_point;
  if (method == SolveMethod::direct_vectorized) return detail::direct_lyapunov(op, rhs, adjoint);
  Matrix X;
  if (!detail::fixed_point_lyapunov(op, rhs, adjoint, opts.tolerance, opts.max_iterations, X))
    throw NoConvergenceError("generalized Lyapunov fixed point: iteration cap exceeded");
  return 0.5 * (X + X.transpose());
}

}  // namespace

NotStabilizingError::NotStabilizingError(double radius)
    : std::runtime_error("gain is not mean-square stabilizing (second-moment spectral radius " +
                         std::to_string(radius) + ")"),
      radius_(radius) {}

NoConvergenceError::NoConvergenceError(const std::string& what) : std::runtime_error(what) {}

namespace detail {

double operator_radius(const SecondMomentOperator& op, int dense_dim_limit) {
  if (op.dim() <= dense_dim_limit) {
    Eigen::EigenSolver<Matrix> es(op.matrix(), /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return op.spectral_radius_power();
}

Matrix direct_lyapunov(const SecondMomentOperator& op, const Matrix& rhs, bool adjoint) {
  const int n = op.dim();
  const Matrix M = op.matrix();
  Matrix lhs = Matrix::Identity(n * n, n * n);
  if (adjoint)
    lhs -= M.transpose();
  else
    lhs -= M;
  const Eigen::Map<const Vector> rhs_vec(rhs.data(), n * n);
  Vector sol = Eigen::PartialPivLU<Matrix>(lhs).solve(rhs_vec);
  Matrix X = Eigen::Map<Matrix>(sol.data(), n, n);
  return 0.5 * (X + X.transpose());
}

bool fixed_point_lyapunov(const SecondMomentOperator& op, const Matrix& rhs, bool adjoint,
                          double tol, int max_iters, Matrix& x, int* iters_used) {
  const int n = op.dim();
  if (x.rows() != n || x.cols() != n || !x.allFinite()) x = rhs;
  const double blowup = 1e120 * std::max(1.0, rhs.norm());
  Matrix applied(n, n);
  for (int it = 1; it <= max_iters; ++it) {
    if (adjoint)
      op.apply_adjoint(x, applied);
    else
      op.apply(x, applied);
    applied += rhs;
    const double norm = applied.norm();
    if (!std::isfinite(norm) || norm > blowup) {
      if (iters_used) *iters_used = it;
      return false;
    }
    const double step = (applied - x).norm();
    x.swap(applied);
    if (step <= tol * std::max(1.0, norm)) {
      if (iters_used) *iters_used = it;
      return true;
    }
  }
  if (iters_used) *iters_used = max_iters;
  return false;
}

}  // namespace detail

Matrix solve_cost_lyapunov(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                           const Gain& K, const SolveOptions& opts) {
  check_dims(sys, cost);
  SecondMomentOperator op(sys, K);
  const Matrix rhs = cost.Q + K.K.transpose() * cost.R * K.K;
  return solve_generalized_lyapunov(op, rhs, /*adjoint=*/true, opts);
}

Matrix solve_covariance_lyapunov(const MultiplicativeNoiseSystem& sys, const Matrix& Sigma0,
                                 const Gain& K, const SolveOptions& opts) {
  if (Sigma0.rows() != sys.state_dim() || Sigma0.cols() != sys.state_dim())
    throw std::invalid_argument("solver: Sigma0 must be n x n");
  SecondMomentOperator op(sys, K);
  return solve_generalized_lyapunov(op, 0.5 * (Sigma0 + Sigma0.transpose()), /*adjoint=*/false,
                                    opts);
}

RiccatiSolution riccati_value_iteration(const MultiplicativeNoiseSystem& sys,
                                        const CostSpec& cost, const SolveOptions& opts,
                                        const std::function<void(const Matrix&)>& on_iterate) {
  check_dims(sys, cost);
  const auto& A = sys.A();
  const auto& B = sys.B();
  const int m = sys.input_dim();

  auto riccati_map = [&](const Matrix& P) {
    Matrix next = cost.Q + A.transpose() * P * A;
    for (const auto& t : sys.state_noise())
      next.noalias() += t.variance * (t.direction.transpose() * P * t.direction);
    if (m > 0) {
      Matrix G = cost.R + B.transpose() * P * B;
      for (const auto& t : sys.input_noise())
        G.noalias() += t.variance * (t.direction.transpose() * P * t.direction);
      const Matrix W = B.transpose() * P * A;  // m x n
      next.noalias() -= W.transpose() * Eigen::LDLT<Matrix>(G).solve(W);
    }
    return Matrix(0.5 * (next + next.transpose()));
  };

  RiccatiSolution solution;
  solution.P = cost.Q;
  if (on_iterate) on_iterate(solution.P);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Matrix next = riccati_map(solution.P);
    const double residual = (next - solution.P).norm() / std::max(1.0, solution.P.norm());
    if (!next.allFinite())
      throw NoConvergenceError("riccati value iteration: iterates diverged");
    if (residual <= opts.tolerance) {
      solution.iterations_used = it;
      solution.residual = residual;
      return solution;
    }
    solution.P = next;
    if (on_iterate) on_iterate(solution.P);
  }
  throw NoConvergenceError(
      "riccati value iteration: no convergence after " + std::to_string(opts.max_iterations) +
      " iterations (system may not be mean-square stabilizable)");
}

Gain optimal_gain(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Matrix& P) {
  check_dims(sys, cost);
  if (P.rows() != sys.state_dim() || P.cols() != sys.state_dim())
    throw std::invalid_argument("optimal_gain: P must be n x n");
  const auto& B = sys.B();
  const Matrix Ps = 0.5 * (P + P.transpose());
  Matrix G = cost.R + B.transpose() * Ps * B;
  for (const auto& t : sys.input_noise())
    G.noalias() += t.variance * (t.direction.transpose() * Ps * t.direction);
  Matrix K = -Eigen::LDLT<Matrix>(G).solve(B.transpose() * Ps * sys.A());
  if (!K.allFinite()) throw std::runtime_error("optimal_gain: inner matrix is singular");
  return Gain(std::move(K));
}

}  // namespace lqrm
