#pragma once

#include <cstdint>
#include <vector>

#include "lqrm/kernels.hpp"

namespace lqrm {

// One multiplicative noise channel: a variance and the matrix direction it
// perturbs the dynamics in.
struct NoiseTerm {
  double variance = 0.0;
  Matrix direction;
};

// Discrete-time linear system x+ = (A + sum_i d_i A_i) x + (B + sum_j g_j B_j) u
// with zero-mean noises d_i (variance alpha_i) and g_j (variance beta_j).
// With no noise terms this is exactly a deterministic linear system.
class MultiplicativeNoiseSystem {
 public:
  MultiplicativeNoiseSystem(Matrix A, Matrix B,
                            std::vector<NoiseTerm> state_noise = {},
                            std::vector<NoiseTerm> input_noise = {});

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const std::vector<NoiseTerm>& state_noise() const { return state_noise_; }
  const std::vector<NoiseTerm>& input_noise() const { return input_noise_; }

  int state_dim() const { return static_cast<int>(A_.rows()); }
  int input_dim() const { return static_cast<int>(B_.cols()); }

 private:
  Matrix A_;
  Matrix B_;
  std::vector<NoiseTerm> state_noise_;
  std::vector<NoiseTerm> input_noise_;
};

// Quadratic stage cost x'Qx + u'Ru and initial-state covariance Sigma0.
// Inputs are symmetrized on construction; Q, Sigma0 must be PSD and R PD.
struct CostSpec {
  Matrix Q;
  Matrix R;
  Matrix Sigma0;

  CostSpec(Matrix Q_in, Matrix R_in, Matrix Sigma0_in);
};

// Linear state-feedback gain, u = K x. Entries must be finite.
struct Gain {
  Matrix K;

  explicit Gain(Matrix K_in);
  Gain() = default;
};

struct StabilityReport {
  double spectral_radius = 0.0;
  bool stable = false;
  int operator_dim = 0;  // n^2
};

// Closed-loop second-moment operator
//   X -> Acl X Acl' + sum_i alpha_i A_i X A_i' + sum_j beta_j (B_j K) X (B_j K)'
// with Acl = A + B K. Precomputes Acl and B_j K so repeated applications
// (fixed-point solves, power iteration) stay cheap.
class SecondMomentOperator {
 public:
  SecondMomentOperator(const MultiplicativeNoiseSystem& sys, const Gain& K);

  int dim() const { return n_; }

  // Covariance direction (the operator itself).
  void apply(const Matrix& X, Matrix& out) const;
  // Cost direction (the adjoint): X -> Acl' X Acl + sum A_i' X A_i + ...
  void apply_adjoint(const Matrix& X, Matrix& out) const;

  // Dense n^2 x n^2 Kronecker representation.
  Matrix matrix(ExecPolicy policy = ExecPolicy::parallel) const;

  // Spectral radius by power iteration on the operator. The operator maps
  // the PSD cone into itself, so its spectral radius is attained by a real
  // eigenvalue with a PSD eigenvector and the iteration is started (or warm
  // started) inside the cone. `warm` is updated with the dominant direction.
  double spectral_radius_power(double tol = 1e-10, int max_iters = 100000,
                               Matrix* warm = nullptr) const;

 private:
  int n_;
  Matrix acl_;
  std::vector<std::pair<double, Matrix>> state_terms_;  // (alpha_i, A_i)
  std::vector<std::pair<double, Matrix>> input_terms_;  // (beta_j, B_j K)
};

// Dense Kronecker representation of the closed-loop second-moment operator.
Matrix second_moment_matrix(const MultiplicativeNoiseSystem& sys, const Gain& K,
                            ExecPolicy policy = ExecPolicy::parallel);

// Mean-square stability: spectral radius of the second-moment operator < 1 - margin.
// Uses a dense eigensolve up to `dense_dim_limit` states, power iteration beyond.
StabilityReport is_mean_square_stable(const MultiplicativeNoiseSystem& sys, const Gain& K,
                                      double margin = 0.0, int dense_dim_limit = 60);

struct MonteCarloResult {
  double cost_estimate = 0.0;
  double cost_stderr = 0.0;
  bool diverged = false;  // some rollout overflowed (mean-square unstable K)
};

// Sample mean and standard error of sum_{t=0}^{horizon-1} (x'Qx + u'Ru) with
// u = Kx, x0 ~ N(0, Sigma0) and Gaussian noises. Rollout r uses seed + r, so
// the result is identical for serial and parallel execution.
MonteCarloResult monte_carlo_simulate(const MultiplicativeNoiseSystem& sys,
                                      const CostSpec& cost, const Gain& K,
                                      int horizon, int rollouts, std::uint64_t seed,
                                      ExecPolicy policy = ExecPolicy::parallel);

}  // namespace lqrm
