#pragma once

#include <optional>

#include "lqrm/solvers.hpp"

namespace lqrm {

// Cost evaluation at a gain. For a mean-square unstable gain J is +infinity
// and the solution matrices are absent; instability is a value, not an
// exception, so optimizers can probe infeasible steps cheaply.
struct CostEval {
  double J = 0.0;
  bool stable = false;
  std::optional<Matrix> P_K;
  std::optional<Matrix> Sigma_K;
};

// J(K) = Tr(P_K Sigma0) = Tr((Q + K'RK) Sigma_K); +infinity when unstable.
CostEval lqrm_cost(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Gain& K,
                   const SolveOptions& opts = {});

// Exact policy gradient
//   grad J = 2 [ (R + B'P_K B + sum_j beta_j B_j'P_K B_j) K + B'P_K A ] Sigma_K.
Matrix lqrm_gradient(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Gain& K,
                     const SolveOptions& opts = {});

// Central-difference gradient, (J(K + eps E_ij) - J(K - eps E_ij)) / (2 eps).
// epsilon <= 0 selects the default 1e-6 * (1 + ||K||_F).
Matrix fd_gradient(const MultiplicativeNoiseSystem& sys, const CostSpec& cost, const Gain& K,
                   double epsilon = 0.0, ExecPolicy policy = ExecPolicy::parallel);

// grad J * Sigma_K^{-1}.
Matrix natural_gradient_step(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                             const Gain& K);

// R_K^{-1} grad J * Sigma_K^{-1} with R_K = R + B'P_K B + sum_j beta_j B_j'P_K B_j;
// one step of size 1/2 from any stabilizing K lands on -R_K^{-1} B'P_K A.
Matrix gauss_newton_step(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                         const Gain& K);

struct GradientDominationResult {
  double lhs = 0.0;  // J(K) - J(K*)
  double rhs = 0.0;  // ||Sigma_K*|| / (4 sigma_min(R) sigma_min(Sigma0)^2) * ||grad J(K)||_F^2
  bool holds = false;
};

GradientDominationResult gradient_domination_check(const MultiplicativeNoiseSystem& sys,
                                                   const CostSpec& cost, const Gain& K,
                                                   const Gain& Kstar);

}  // namespace lqrm
