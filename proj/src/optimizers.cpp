#include "lqrm/optimizers.hpp"

#include <chrono>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace lqrm {

namespace {

constexpr int kMaxBackoffs = 60;

struct EvalResult {
  double J = 0.0;
  Matrix P;
  Matrix Sigma;
  Matrix gradJ;
};

// Per-run evaluator. Keeps the dominant second-moment eigendirection and both
// Lyapunov solutions warm across iterates; successive gains differ by one
// small step, so the warm-started solves need only a handful of sweeps.
class WarmEvaluator {
 public:
  WarmEvaluator(const MultiplicativeNoiseSystem& sys, const CostSpec& cost)
      : sys_(sys), cost_(cost) {}

  // Empty optional: candidate is not mean-square stabilizing.
  std::optional<EvalResult> evaluate(const Gain& K) {
    SecondMomentOperator op(sys_, K);
    const double radius = op.spectral_radius_power(1e-7, 20000, &warm_eig_);
    if (!(radius < 1.0 - 1e-12)) return std::nullopt;

    EvalResult ev;
    const Matrix rhs_cost = cost_.Q + K.K.transpose() * cost_.R * K.K;
    if (!detail::fixed_point_lyapunov(op, rhs_cost, /*adjoint=*/true, 1e-12, 200000, warm_P_))
      return std::nullopt;
    if (!detail::fixed_point_lyapunov(op, cost_.Sigma0, /*adjoint=*/false, 1e-12, 200000,
                                      warm_Sigma_))
      return std::nullopt;
    ev.P = 0.5 * (warm_P_ + warm_P_.transpose());
    ev.Sigma = 0.5 * (warm_Sigma_ + warm_Sigma_.transpose());
    ev.J = (ev.P * cost_.Sigma0).trace();

    Matrix RK = cost_.R + sys_.B().transpose() * ev.P * sys_.B();
    for (const auto& t : sys_.input_noise())
      RK.noalias() += t.variance * (t.direction.transpose() * ev.P * t.direction);
    ev.gradJ = 2.0 * (RK * K.K + sys_.B().transpose() * ev.P * sys_.A()) * ev.Sigma;
    return ev;
  }

 private:
  const MultiplicativeNoiseSystem& sys_;
  const CostSpec& cost_;
  Matrix warm_eig_, warm_P_, warm_Sigma_;
};

void validate_config(const OptimizerConfig& config) {
  if (config.eta <= 0.0) throw std::invalid_argument("optimizer: eta must be > 0");
  if (config.max_iterations < 0) throw std::invalid_argument("optimizer: max_iterations < 0");
  if (config.best_hold_iterations < 1)
    throw std::invalid_argument("optimizer: best_hold_iterations must be >= 1");
  if (config.feasibility_backoff <= 0.0 || config.feasibility_backoff >= 1.0)
    throw std::invalid_argument("optimizer: feasibility_backoff must be in (0,1)");
  if (config.record_every < 1) throw std::invalid_argument("optimizer: record_every must be >= 1");
}

RunResult run_common(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                     const RegularizerSpec& reg, const Gain& K0, const OptimizerConfig& config,
                     OptimMethod method) {
  validate_config(config);
  reg.validate();
  if (method == OptimMethod::gradient && reg.gamma > 0.0 && reg.huber_phi <= 0.0)
    throw std::invalid_argument("run_gradient: gamma > 0 requires huber_phi > 0");
  if (method != OptimMethod::gradient && reg.huber_phi != 0.0)
    throw std::invalid_argument("subgradient/proximal methods require huber_phi = 0");
  if (method == OptimMethod::proximal && reg.gamma > 0.0 &&
      (reg.kind == RegularizerKind::RowMax || reg.kind == RegularizerKind::ColMax))
    throw UnsupportedProxError("run_proximal: no closed-form prox for the max-norm penalties");

  const auto t_start = std::chrono::steady_clock::now();
  const double grad_threshold =
      config.grad_norm_tol_coeff * sys.input_dim() * sys.state_dim();

  RunResult result;
  WarmEvaluator evaluator(sys, cost);
  auto eval = evaluator.evaluate(K0);
  if (!eval) {
    result.final_gain = K0;
    result.best_gain = K0;
    result.best_cost = std::numeric_limits<double>::infinity();
    result.best_J = std::numeric_limits<double>::infinity();
    result.termination = Termination::infeasible_start;
    result.final_stability = is_mean_square_stable(sys, K0);
    result.best_stability = result.final_stability;
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
  }

  Gain K = K0;
  double reg_val = reg.gamma > 0.0 ? reg_value(K.K, reg) : 0.0;
  double total_cost = eval->J + reg.gamma * reg_val;
  result.best_gain = K;
  result.best_cost = total_cost;
  result.best_J = eval->J;
  int best_iter = 0;
  double eta_in_effect = config.eta;
  int last_recorded = -1;

  auto direction = [&](const Gain& at, const EvalResult& ev) -> Matrix {
    if (reg.gamma <= 0.0 || method == OptimMethod::proximal) return ev.gradJ;
    if (method == OptimMethod::gradient)
      return ev.gradJ + reg.gamma * huber_gradient(at.K, reg);
    return ev.gradJ + reg.gamma * reg_subgradient(at.K, reg);
  };

  auto record = [&](int iter, double grad_norm, bool force) {
    if (!force && iter % config.record_every != 0) return;
    if (iter == last_recorded) return;
    result.trajectory.push_back({iter, eval->J, reg_val, total_cost, grad_norm, eta_in_effect});
    last_recorded = iter;
  };

  int iter = 0;
  while (true) {
    const Matrix G = direction(K, *eval);
    const double grad_norm = G.norm();
    record(iter, grad_norm, /*force=*/false);

    if (method == OptimMethod::gradient && grad_norm < grad_threshold) {
      result.termination = Termination::grad_norm;
      record(iter, grad_norm, /*force=*/true);
      break;
    }
    if (method != OptimMethod::gradient && iter - best_iter >= config.best_hold_iterations) {
      result.termination = Termination::best_hold;
      record(iter, grad_norm, /*force=*/true);
      break;
    }
    if (iter >= config.max_iterations) {
      result.termination = Termination::max_iter;
      record(iter, grad_norm, /*force=*/true);
      break;
    }

    // Guarded step: back eta off for this step only while the candidate is
    // outside the mean-square stable set.
    double eta = config.eta;
    bool accepted = false;
    Gain candidate;
    std::optional<EvalResult> cand_eval;
    for (int backoff = 0; backoff < kMaxBackoffs; ++backoff) {
      Matrix Kc = K.K - eta * G;
      if (method == OptimMethod::proximal && reg.gamma > 0.0)
        Kc = reg_prox(Kc, reg, eta * reg.gamma);
      candidate = Gain(std::move(Kc));
      cand_eval = evaluator.evaluate(candidate);
      if (cand_eval) {
        accepted = true;
        break;
      }
      eta *= config.feasibility_backoff;
    }
    if (!accepted) {
      result.termination = Termination::feasibility_collapse;
      record(iter, grad_norm, /*force=*/true);
      break;
    }

    K = std::move(candidate);
    eval = std::move(cand_eval);
    eta_in_effect = eta;
    reg_val = reg.gamma > 0.0 ? reg_value(K.K, reg) : 0.0;
    total_cost = eval->J + reg.gamma * reg_val;
    ++iter;
    if (total_cost < result.best_cost) {
      result.best_cost = total_cost;
      result.best_J = eval->J;
      result.best_gain = K;
      best_iter = iter;
    }
  }

  result.final_gain = K;
  result.final_stability = is_mean_square_stable(sys, result.final_gain);
  result.best_stability = is_mean_square_stable(sys, result.best_gain);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace

std::string to_string(OptimMethod method) {
  switch (method) {
    case OptimMethod::gradient: return "gradient";
    case OptimMethod::subgradient: return "subgradient";
    case OptimMethod::proximal: return "proximal";
  }
  throw std::logic_error("unknown optimizer method");
}

OptimMethod parse_optim_method(const std::string& name) {
  if (name == "gradient") return OptimMethod::gradient;
  if (name == "subgradient") return OptimMethod::subgradient;
  if (name == "proximal") return OptimMethod::proximal;
  throw std::invalid_argument("unknown optimizer method: \"" + name + "\"");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::grad_norm: return "grad_norm";
    case Termination::best_hold: return "best_hold";
    case Termination::max_iter: return "max_iter";
    case Termination::infeasible_start: return "infeasible_start";
    case Termination::feasibility_collapse: return "feasibility_collapse";
  }
  throw std::logic_error("unknown termination");
}

RunResult run_gradient(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                       const RegularizerSpec& reg, const Gain& K0,
                       const OptimizerConfig& config) {
  return run_common(sys, cost, reg, K0, config, OptimMethod::gradient);
}

RunResult run_subgradient(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                          const RegularizerSpec& reg, const Gain& K0,
                          const OptimizerConfig& config) {
  return run_common(sys, cost, reg, K0, config, OptimMethod::subgradient);
}

RunResult run_proximal(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                       const RegularizerSpec& reg, const Gain& K0, const OptimizerConfig& config) {
  return run_common(sys, cost, reg, K0, config, OptimMethod::proximal);
}

RunResult run_optimizer(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                        const RegularizerSpec& reg, const Gain& K0, const OptimizerConfig& config,
                        OptimMethod method) {
  return run_common(sys, cost, reg, K0, config, method);
}

std::vector<std::pair<double, RunResult>> gamma_sweep(
    const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
    const RegularizerSpec& reg_template, const Gain& K_init, OptimMethod method,
    const SweepConfig& sweep, const OptimizerConfig& config) {
  if (sweep.gamma0 <= 0.0 || sweep.r_gamma <= 1.0 || sweep.eta0 <= 0.0 || sweep.r_eta <= 0.0 ||
      sweep.stages < 1)
    throw std::invalid_argument("gamma_sweep: invalid sweep configuration");
  std::vector<std::pair<double, RunResult>> out;
  Gain K = K_init;
  for (int s = 0; s < sweep.stages; ++s) {
    RegularizerSpec reg = reg_template;
    reg.gamma = sweep.gamma0 * std::pow(sweep.r_gamma, s);
    OptimizerConfig stage_config = config;
    stage_config.eta = sweep.eta0 * std::pow(sweep.r_eta, s);
    try {
      RunResult result = run_common(sys, cost, reg, K, stage_config, method);
      if (result.termination == Termination::infeasible_start)
        throw NotStabilizingError(result.final_stability.spectral_radius);
      K = result.best_gain;
      out.emplace_back(reg.gamma, std::move(result));
    } catch (const std::exception& e) {
      throw std::runtime_error("gamma_sweep: stage " + std::to_string(s) + " (gamma=" +
                               std::to_string(reg.gamma) + ") failed: " + e.what());
    }
  }
  return out;
}

ConvergenceRateReport verify_convergence_rate(const MultiplicativeNoiseSystem& sys,
                                              const CostSpec& cost, const Gain& K0, double eta,
                                              int steps) {
  Eigen::SelfAdjointEigenSolver<Matrix> es0(cost.Sigma0, Eigen::EigenvaluesOnly);
  if (es0.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("verify_convergence_rate: Sigma0 must be positive definite");
  Eigen::SelfAdjointEigenSolver<Matrix> esr(cost.R, Eigen::EigenvaluesOnly);

  const RiccatiSolution riccati = riccati_value_iteration(sys, cost);
  const Gain Kstar = optimal_gain(sys, cost, riccati.P);
  const double J_star = (riccati.P * cost.Sigma0).trace();
  const Matrix sigma_star = solve_covariance_lyapunov(sys, cost.Sigma0, Kstar);
  Eigen::SelfAdjointEigenSolver<Matrix> ess(sigma_star, Eigen::EigenvaluesOnly);

  ConvergenceRateReport report;
  report.rate_bound = 1.0 - eta * esr.eigenvalues().minCoeff() *
                                es0.eigenvalues().minCoeff() * es0.eigenvalues().minCoeff() /
                                ess.eigenvalues().maxCoeff();
  const double gap_floor = 1e-12 * std::max(1.0, J_star);

  WarmEvaluator evaluator(sys, cost);
  auto eval = evaluator.evaluate(K0);
  if (!eval) throw NotStabilizingError(is_mean_square_stable(sys, K0).spectral_radius);
  double gap = eval->J - J_star;
  if (gap <= gap_floor) {
    report.converged_at_start = true;
    return report;
  }
  Gain K = K0;
  for (int k = 0; k < steps; ++k) {
    Gain next(Matrix(K.K - eta * eval->gradJ));
    auto next_eval = evaluator.evaluate(next);
    if (!next_eval) break;  // stepped outside the stabilizing set
    const double next_gap = next_eval->J - J_star;
    report.ratios.push_back(next_gap / gap);
    if (next_gap <= gap_floor) break;
    gap = next_gap;
    K = std::move(next);
    eval = std::move(next_eval);
  }
  return report;
}

void write_trajectory_csv(const RunResult& result, std::ostream& out) {
  out << "iter,J,reg,C,grad_norm,eta\n";
  char line[256];
  for (const auto& r : result.trajectory) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.J,
                  r.reg_value, r.total_cost, r.grad_norm, r.eta);
    out << line;
  }
}

}  // namespace lqrm
