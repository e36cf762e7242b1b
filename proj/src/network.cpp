#include "lqrm/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace lqrm {

namespace {

bool is_connected(const Matrix& adjacency) {
  const Eigen::Index n = adjacency.rows();
  std::vector<bool> seen(n, false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  Eigen::Index count = 1;
  while (!stack.empty()) {
    const Eigen::Index u = stack.back();
    stack.pop_back();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (adjacency(u, v) != 0.0 && !seen[v]) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

Matrix gaussian_direction(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = normal(gen);
  const double norm = M.norm();
  if (norm > 0.0) M /= norm;  // variances carry all magnitude information
  return M;
}

}  // namespace

double er_connectivity_probability(int n, double c) {
  if (n < 2) throw std::invalid_argument("er_connectivity_probability: n must be >= 2");
  return (std::log(double(n)) + c) / n;
}

Matrix erdos_renyi_adjacency(int n, double p, std::uint64_t seed, int max_retries) {
  if (n < 2) throw std::invalid_argument("erdos_renyi_adjacency: n must be >= 2");
  if (p <= 0.0 || p >= 1.0)
    throw std::invalid_argument("erdos_renyi_adjacency: p must be in (0,1)");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::mt19937_64 gen(seed + static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Matrix W = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (uniform(gen) < p) W(i, j) = W(j, i) = 1.0;
    if (is_connected(W)) return W;
  }
  throw std::runtime_error("erdos_renyi_adjacency: no connected sample within retry budget");
}

Matrix grounded_laplacian(const Matrix& adjacency) {
  const Eigen::Index n = adjacency.rows();
  if (adjacency.cols() != n || n < 2)
    throw std::invalid_argument("grounded_laplacian: adjacency must be square, n >= 2");
  if (!is_connected(adjacency))
    throw std::invalid_argument("grounded_laplacian: graph must be connected");
  Matrix L = Matrix(adjacency.rowwise().sum().asDiagonal()) - adjacency;
  return L.block(1, 1, n - 1, n - 1);
}

std::pair<Matrix, Matrix> tustin_discretize(const Matrix& A_c, const Matrix& B_c, double ts) {
  const Eigen::Index n = A_c.rows();
  if (A_c.cols() != n) throw std::invalid_argument("tustin_discretize: A_c must be square");
  if (B_c.rows() != n) throw std::invalid_argument("tustin_discretize: B_c must have n rows");
  if (ts <= 0.0) throw std::invalid_argument("tustin_discretize: ts must be > 0");
  const Matrix resolvent = Matrix::Identity(n, n) - (ts / 2.0) * A_c;
  Eigen::FullPivLU<Matrix> lu(resolvent);
  if (!lu.isInvertible())
    throw std::runtime_error("tustin_discretize: I - ts/2 A_c is singular");
  Matrix A_d = lu.solve(Matrix::Identity(n, n) + (ts / 2.0) * A_c);
  Matrix B_d = lu.solve(B_c) * ts;
  return {std::move(A_d), std::move(B_d)};
}

NoiseVariances calibrate_noise_level(const MultiplicativeNoiseSystem& sys,
                                     CalibrationTarget target, double margin) {
  if (margin <= 0.0 || margin >= 1.0)
    throw std::invalid_argument("calibrate_noise_level: margin must be in (0,1)");
  if (sys.state_noise().empty() && sys.input_noise().empty())
    throw std::invalid_argument("calibrate_noise_level: system has no noise terms");

  const Gain zero_gain(Matrix::Zero(sys.input_dim(), sys.state_dim()));
  Matrix warm;
  auto radius_at = [&](double s) {
    std::vector<NoiseTerm> state = sys.state_noise(), input = sys.input_noise();
    for (auto& t : state) t.variance *= s;
    for (auto& t : input) t.variance *= s;
    MultiplicativeNoiseSystem scaled(sys.A(), sys.B(), std::move(state), std::move(input));
    return SecondMomentOperator(scaled, zero_gain).spectral_radius_power(1e-9, 200000, &warm);
  };

  const double base_radius = radius_at(0.0);
  if (base_radius >= 1.0)
    throw std::invalid_argument("calibrate_noise_level: deterministic part is not open-loop "
                                "mean-square stable");
  const double target_radius =
      target == CalibrationTarget::stable_margin ? 1.0 - margin : 1.0 + margin;
  if (target_radius <= base_radius)
    throw std::invalid_argument("calibrate_noise_level: target radius below the noise-free "
                                "radius; reduce the margin");

  double lo = 0.0, hi = 1.0;
  int doublings = 0;
  while (radius_at(hi) < target_radius) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 100)
      throw std::runtime_error("calibrate_noise_level: radius does not respond to the noise "
                               "scale (zero directions?)");
  }
  double mid = hi, achieved = 0.0;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    achieved = radius_at(mid);
    if (std::abs(achieved - target_radius) <= 1e-6) break;
    if (achieved > target_radius)
      hi = mid;
    else
      lo = mid;
  }

  NoiseVariances out;
  out.scale = mid;
  out.achieved_radius = achieved;
  for (const auto& t : sys.state_noise()) out.state.push_back(t.variance * mid);
  for (const auto& t : sys.input_noise()) out.input.push_back(t.variance * mid);
  return out;
}

MultiplicativeNoiseSystem with_variances(const MultiplicativeNoiseSystem& sys,
                                         const NoiseVariances& variances) {
  if (variances.state.size() != sys.state_noise().size() ||
      variances.input.size() != sys.input_noise().size())
    throw std::invalid_argument("with_variances: variance counts do not match the system");
  std::vector<NoiseTerm> state = sys.state_noise(), input = sys.input_noise();
  for (std::size_t i = 0; i < state.size(); ++i) state[i].variance = variances.state[i];
  for (std::size_t j = 0; j < input.size(); ++j) input[j].variance = variances.input[j];
  return MultiplicativeNoiseSystem(sys.A(), sys.B(), std::move(state), std::move(input));
}

MultiplicativeNoiseSystem build_benchmark(const NetworkSpec& spec) {
  if (spec.n_nodes < 2) throw std::invalid_argument("network: n_nodes must be >= 2");
  if (spec.noise_count_state < 0 || spec.noise_count_input < 0)
    throw std::invalid_argument("network: noise counts must be >= 0");

  const Matrix adjacency = erdos_renyi_adjacency(spec.n_nodes, spec.p_er, spec.seed);
  const Matrix Lg = grounded_laplacian(adjacency);
  const Eigen::Index n = Lg.rows();
  auto [A, B] = tustin_discretize(-Lg, Matrix::Identity(n, n), spec.ts);

  std::mt19937_64 gen(spec.seed + 0x9e3779b97f4a7c15ULL);
  std::vector<NoiseTerm> state_noise, input_noise;
  for (int i = 0; i < spec.noise_count_state; ++i)
    state_noise.push_back({1.0, gaussian_direction(gen, n, n)});
  for (int j = 0; j < spec.noise_count_input; ++j)
    input_noise.push_back({1.0, gaussian_direction(gen, n, n)});

  MultiplicativeNoiseSystem base(std::move(A), std::move(B), std::move(state_noise),
                                 std::move(input_noise));
  if (spec.explicit_scales) {
    NoiseVariances v;
    v.scale = 1.0;
    for (std::size_t i = 0; i < base.state_noise().size(); ++i)
      v.state.push_back(spec.explicit_scales->first);
    for (std::size_t j = 0; j < base.input_noise().size(); ++j)
      v.input.push_back(spec.explicit_scales->second);
    return with_variances(base, v);
  }
  if (base.state_noise().empty() && base.input_noise().empty()) return base;
  const CalibrationTarget target = spec.noise_level == NoiseLevel::low
                                       ? CalibrationTarget::stable_margin
                                       : CalibrationTarget::unstable_margin;
  return with_variances(base, calibrate_noise_level(base, target, spec.calibration_margin));
}

}  // namespace lqrm
