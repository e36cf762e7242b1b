#pragma once

#include <functional>
#include <stdexcept>

#include "lqrm/system.hpp"

namespace lqrm {

enum class SolveMethod { direct_vectorized, fixed_point, auto_select };

struct SolveOptions {
  SolveMethod method = SolveMethod::auto_select;
  double tolerance = 1e-12;       // relative residual
  int max_iterations = 100000;
  int auto_threshold_dim = 60;    // direct solve up to this state dimension
};

struct RiccatiSolution {
  Matrix P;
  int iterations_used = 0;
  double residual = 0.0;
};

// Thrown when a gain is not mean-square stabilizing; carries the offending
// spectral radius for caller-side step-size control.
class NotStabilizingError : public std::runtime_error {
 public:
  explicit NotStabilizingError(double radius);
  double spectral_radius() const { return radius_; }

 private:
  double radius_;
};

class NoConvergenceError : public std::runtime_error {
 public:
  explicit NoConvergenceError(const std::string& what);
};

// P_K = Q + K'RK + Acl' P_K Acl + sum_i alpha_i A_i' P_K A_i + sum_j beta_j K'B_j' P_K B_j K.
// Direct method solves (I - M') vec(P) = vec(Q + K'RK) with M the second-moment matrix.
Matrix solve_cost_lyapunov(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                           const Gain& K, const SolveOptions& opts = {});

// Sigma_K = Sigma0 + Acl Sigma_K Acl' + sum_i alpha_i A_i Sigma_K A_i' + sum_j beta_j B_j K Sigma_K K'B_j'.
Matrix solve_covariance_lyapunov(const MultiplicativeNoiseSystem& sys, const Matrix& Sigma0,
                                 const Gain& K, const SolveOptions& opts = {});

// Value iteration from P0 = Q on
//   P = Q + A'PA + sum_i alpha_i A_i'PA_i - A'PB (R + B'PB + sum_j beta_j B_j'PB_j)^{-1} B'PA.
// `on_iterate`, when set, observes every iterate (used by monotonicity checks).
RiccatiSolution riccati_value_iteration(
    const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const SolveOptions& opts = {},
    const std::function<void(const Matrix&)>& on_iterate = nullptr);

// K* = -(R + B'PB + sum_j beta_j B_j'PB_j)^{-1} B'PA.
Gain optimal_gain(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Matrix& P);

namespace detail {

// Warm-startable fixed-point Lyapunov solve. Returns false when the iteration
// diverges (gain not mean-square stabilizing) or hits the iteration cap;
// `adjoint` selects the cost direction; rhs is the constant term.
bool fixed_point_lyapunov(const SecondMomentOperator& op, const Matrix& rhs, bool adjoint,
                          double tol, int max_iters, Matrix& x, int* iters_used = nullptr);

// Second-moment spectral radius: dense eigensolve up to dense_dim_limit
// states, power iteration beyond.
double operator_radius(const SecondMomentOperator& op, int dense_dim_limit);

// One-shot vectorized solve of (I - M or I - M') vec(X) = vec(rhs); no
// stability check.
Matrix direct_lyapunov(const SecondMomentOperator& op, const Matrix& rhs, bool adjoint);

}  // namespace detail

}  // namespace lqrm
