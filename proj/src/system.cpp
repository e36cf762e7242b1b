#include "lqrm/system.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lqrm {

namespace {

Matrix symmetrized(const Matrix& X) { return 0.5 * (X + X.transpose()); }

double min_eigenvalue(const Matrix& sym) {
  if (sym.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

MultiplicativeNoiseSystem::MultiplicativeNoiseSystem(Matrix A, Matrix B,
                                                     std::vector<NoiseTerm> state_noise,
                                                     std::vector<NoiseTerm> input_noise)
    : A_(std::move(A)), B_(std::move(B)), state_noise_(std::move(state_noise)),
      input_noise_(std::move(input_noise)) {
  const Eigen::Index n = A_.rows();
  if (A_.cols() != n) throw std::invalid_argument("system: A must be square");
  if (B_.rows() != n) throw std::invalid_argument("system: B must have as many rows as A");
  for (const auto& t : state_noise_) {
    if (t.variance < 0.0) throw std::invalid_argument("system: negative state noise variance");
    if (t.direction.rows() != n || t.direction.cols() != n)
      throw std::invalid_argument("system: state noise direction must be n x n");
  }
  for (const auto& t : input_noise_) {
    if (t.variance < 0.0) throw std::invalid_argument("system: negative input noise variance");
    if (t.direction.rows() != n || t.direction.cols() != B_.cols())
      throw std::invalid_argument("system: input noise direction must be n x m");
  }
}

CostSpec::CostSpec(Matrix Q_in, Matrix R_in, Matrix Sigma0_in)
    : Q(symmetrized(Q_in)), R(symmetrized(R_in)), Sigma0(symmetrized(Sigma0_in)) {
  if (Q.rows() != Q.cols() || R.rows() != R.cols() || Sigma0.rows() != Sigma0.cols())
    throw std::invalid_argument("cost: Q, R, Sigma0 must be square");
  if (Sigma0.rows() != Q.rows())
    throw std::invalid_argument("cost: Sigma0 must match the dimension of Q");
  const double psd_tol = 1e-10;
  if (min_eigenvalue(Q) < -psd_tol * std::max(1.0, Q.norm()))
    throw std::invalid_argument("cost: Q must be positive semidefinite");
  if (min_eigenvalue(Sigma0) < -psd_tol * std::max(1.0, Sigma0.norm()))
    throw std::invalid_argument("cost: Sigma0 must be positive semidefinite");
  if (R.rows() > 0 && min_eigenvalue(R) <= 0.0)
    throw std::invalid_argument("cost: R must be positive definite");
}

Gain::Gain(Matrix K_in) : K(std::move(K_in)) {
  if (!K.allFinite()) throw std::invalid_argument("gain: entries must be finite");
}

SecondMomentOperator::SecondMomentOperator(const MultiplicativeNoiseSystem& sys, const Gain& K)
    : n_(sys.state_dim()) {
  if (K.K.rows() != sys.input_dim() || K.K.cols() != sys.state_dim())
    throw std::invalid_argument("second moment operator: gain must be m x n");
  acl_ = sys.A() + sys.B() * K.K;
  for (const auto& t : sys.state_noise())
    if (t.variance > 0.0) state_terms_.emplace_back(t.variance, t.direction);
  for (const auto& t : sys.input_noise())
    if (t.variance > 0.0) input_terms_.emplace_back(t.variance, t.direction * K.K);
}

void SecondMomentOperator::apply(const Matrix& X, Matrix& out) const {
  Matrix t = X * acl_.transpose();
  out.noalias() = acl_ * t;
  for (const auto& [w, S] : state_terms_) {
    t.noalias() = X * S.transpose();
    out.noalias() += w * (S * t);
  }
  for (const auto& [w, S] : input_terms_) {
    t.noalias() = X * S.transpose();
    out.noalias() += w * (S * t);
  }
}

void SecondMomentOperator::apply_adjoint(const Matrix& X, Matrix& out) const {
  Matrix t = X * acl_;
  out.noalias() = acl_.transpose() * t;
  for (const auto& [w, S] : state_terms_) {
    t.noalias() = X * S;
    out.noalias() += w * (S.transpose() * t);
  }
  for (const auto& [w, S] : input_terms_) {
    t.noalias() = X * S;
    out.noalias() += w * (S.transpose() * t);
  }
}

Matrix SecondMomentOperator::matrix(ExecPolicy policy) const {
  std::vector<std::pair<double, Matrix>> terms;
  terms.emplace_back(1.0, acl_);
  for (const auto& t : state_terms_) terms.push_back(t);
  for (const auto& t : input_terms_) terms.push_back(t);
  return kronecker_square_sum(terms, policy);
}

double SecondMomentOperator::spectral_radius_power(double tol, int max_iters, Matrix* warm) const {
  Matrix X;
  if (warm && warm->rows() == n_ && warm->cols() == n_ && warm->norm() > 0.0 && warm->allFinite())
    X = *warm;
  else
    X = Matrix::Identity(n_, n_);
  X /= X.norm();
  Matrix Y(n_, n_);
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    apply(X, Y);
    const double norm = Y.norm();
    if (norm == 0.0 || !std::isfinite(norm)) {
      if (warm) *warm = Matrix::Identity(n_, n_);
      return norm == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    // Rayleigh estimate with an eigenpair residual stop; X is kept inside the
    // PSD cone where the dominant eigenvector lives.
    lambda = (X.array() * Y.array()).sum();
    const double residual = (Y - lambda * X).norm();
    X = Y / norm;
    if (residual <= tol * std::max(1.0, std::abs(lambda))) break;
  }
  if (warm) *warm = X;
  return lambda;
}

Matrix second_moment_matrix(const MultiplicativeNoiseSystem& sys, const Gain& K,
                            ExecPolicy policy) {
  return SecondMomentOperator(sys, K).matrix(policy);
}

StabilityReport is_mean_square_stable(const MultiplicativeNoiseSystem& sys, const Gain& K,
                                      double margin, int dense_dim_limit) {
  SecondMomentOperator op(sys, K);
  StabilityReport report;
  report.operator_dim = op.dim() * op.dim();
  if (op.dim() <= dense_dim_limit) {
    const Matrix M = op.matrix();
    Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
    report.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  } else {
    report.spectral_radius = op.spectral_radius_power();
  }
  report.stable = report.spectral_radius < 1.0 - margin;
  return report;
}

MonteCarloResult monte_carlo_simulate(const MultiplicativeNoiseSystem& sys, const CostSpec& cost,
                                      const Gain& K, int horizon, int rollouts,
                                      std::uint64_t seed, ExecPolicy policy) {
  if (horizon < 1) throw std::invalid_argument("monte_carlo_simulate: horizon must be >= 1");
  if (rollouts < 1) throw std::invalid_argument("monte_carlo_simulate: rollouts must be >= 1");
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (cost.Q.rows() != n || cost.R.rows() != m || cost.Sigma0.rows() != n)
    throw std::invalid_argument("monte_carlo_simulate: cost dimensions do not match the system");
  if (K.K.rows() != m || K.K.cols() != n)
    throw std::invalid_argument("monte_carlo_simulate: gain must be m x n");

  // PSD square root of Sigma0, robust to zero eigenvalues.
  Eigen::SelfAdjointEigenSolver<Matrix> es(cost.Sigma0);
  const Matrix sqrt_sigma0 =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  const int p = static_cast<int>(sys.state_noise().size());
  const int q = static_cast<int>(sys.input_noise().size());
  std::vector<double> state_sd(p), input_sd(q);
  for (int i = 0; i < p; ++i) state_sd[i] = std::sqrt(sys.state_noise()[i].variance);
  for (int j = 0; j < q; ++j) input_sd[j] = std::sqrt(sys.input_noise()[j].variance);
  constexpr double overflow_limit = 1e150;

  std::vector<double> costs(rollouts);
  auto rollout = [&](int r) {
    std::mt19937_64 engine(seed + static_cast<std::uint64_t>(r));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x(n);
    Vector z(n);
    for (int i = 0; i < n; ++i) z(i) = normal(engine);
    x = sqrt_sigma0 * z;
    Vector u(m), xn(n);
    double c = 0.0;
    for (int t = 0; t < horizon; ++t) {
      u.noalias() = K.K * x;
      c += x.dot(cost.Q * x) + u.dot(cost.R * u);
      if (!std::isfinite(c) || c > overflow_limit) {
        c = std::numeric_limits<double>::infinity();
        break;
      }
      xn.noalias() = sys.A() * x;
      xn.noalias() += sys.B() * u;
      for (int i = 0; i < p; ++i) {
        const double d = state_sd[i] * normal(engine);
        xn.noalias() += d * (sys.state_noise()[i].direction * x);
      }
      for (int j = 0; j < q; ++j) {
        const double g = input_sd[j] * normal(engine);
        xn.noalias() += g * (sys.input_noise()[j].direction * u);
      }
      x = xn;
    }
    costs[r] = c;
  };

  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rollouts; ++r) rollout(r);
  } else {
    for (int r = 0; r < rollouts; ++r) rollout(r);
  }

  MonteCarloResult result;
  double sum = 0.0;
  for (double c : costs) {
    if (!std::isfinite(c)) result.diverged = true;
    sum += c;
  }
  result.cost_estimate = sum / rollouts;
  if (result.diverged) {
    result.cost_estimate = std::numeric_limits<double>::infinity();
    result.cost_stderr = std::numeric_limits<double>::infinity();
    return result;
  }
  if (rollouts > 1) {
    double ss = 0.0;
    for (double c : costs) ss += (c - result.cost_estimate) * (c - result.cost_estimate);
    result.cost_stderr = std::sqrt(ss / (rollouts - 1)) / std::sqrt(double(rollouts));
  }
  return result;
}

}  // namespace lqrm
