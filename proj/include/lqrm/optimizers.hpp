#pragma once

#include <cmath>
#include <iosfwd>
#include <vector>

#include "lqrm/cost.hpp"
#include "lqrm/regularizers.hpp"

namespace lqrm {

enum class OptimMethod { gradient, subgradient, proximal };

std::string to_string(OptimMethod method);
OptimMethod parse_optim_method(const std::string& name);

struct OptimizerConfig {
  OptimMethod method = OptimMethod::gradient;
  double eta = 1e-5;                  // step size
  int max_iterations = 10000;
  double grad_norm_tol_coeff = 0.1;   // stop when ||grad C||_F < coeff * m * n (gradient method)
  int best_hold_iterations = 100;     // stop when best iterate held this long (sub/prox)
  double feasibility_backoff = 0.5;   // per-step eta multiplier on infeasible candidates
  int record_every = 1;
};

enum class Termination { grad_norm, best_hold, max_iter, infeasible_start, feasibility_collapse };

std::string to_string(Termination t);

struct IterateRecord {
  int iteration = 0;
  double J = 0.0;
  double reg_value = 0.0;
  double total_cost = 0.0;  // C = J + gamma * reg
  double grad_norm = 0.0;   // Frobenius norm of the step direction
  double eta = 0.0;         // eta used to leave this iterate (nominal at the last record)
};

struct RunResult {
  Gain final_gain;
  Gain best_gain;
  double best_cost = 0.0;  // C at the best iterate
  double best_J = 0.0;     // unregularized cost at the best iterate
  std::vector<IterateRecord> trajectory;
  Termination termination = Termination::max_iter;
  double wall_time_seconds = 0.0;
  StabilityReport final_stability;
  StabilityReport best_stability;
};

// Gradient descent on C(K) = J(K) + gamma ||K||_M using the Huber-smoothed
// penalty; requires huber_phi > 0 whenever gamma > 0. Stops when the total
// gradient norm falls below grad_norm_tol_coeff * m * n.
RunResult run_gradient(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                       const RegularizerSpec& reg, const Gain& K0, const OptimizerConfig& config);

// Steps along grad J + gamma * subgradient(||K||_M) (requires huber_phi = 0);
// tracks the best iterate by C and stops after it has been held
// best_hold_iterations iterations.
RunResult run_subgradient(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                          const RegularizerSpec& reg, const Gain& K0,
                          const OptimizerConfig& config);

// Proximal gradient: K+ = prox_{eta*gamma}(K - eta grad J). Iterates are
// exactly sparse; stopping as run_subgradient.
RunResult run_proximal(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                       const RegularizerSpec& reg, const Gain& K0, const OptimizerConfig& config);

RunResult run_optimizer(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                        const RegularizerSpec& reg, const Gain& K0, const OptimizerConfig& config,
                        OptimMethod method);

struct SweepConfig {
  double gamma0 = 10.0;
  double r_gamma = std::sqrt(2.0);
  double eta0 = 1e-5;
  double r_eta = std::pow(std::sqrt(2.0), -std::pow(2.0, 0.25));  // ~0.6626
  int stages = 11;
};

// Warm-started regularization sweep: stage s solves with gamma0 * r_gamma^s and
// eta0 * r_eta^s, starting from the previous stage's best gain.
std::vector<std::pair<double, RunResult>> gamma_sweep(
    const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
    const RegularizerSpec& reg_template, const Gain& K_init, OptimMethod method,
    const SweepConfig& sweep, const OptimizerConfig& config);

struct ConvergenceRateReport {
  std::vector<double> ratios;  // (J_{k+1} - J*) / (J_k - J*)
  double rate_bound = 0.0;     // 1 - eta sigma_min(R) sigma_min(Sigma0)^2 / ||Sigma_K*||
  bool converged_at_start = false;
};

// Diagnostic for unregularized gradient descent: per-step suboptimality ratios
// next to the linear-rate bound.
ConvergenceRateReport verify_convergence_rate(const MultiplicativeNoiseSystem& sys,
                                              const CostSpec& cost, const Gain& K0, double eta,
                                              int steps = 50);

// CSV with columns iter,J,reg,C,grad_norm,eta.
void write_trajectory_csv(const RunResult& result, std::ostream& out);

}  // namespace lqrm
