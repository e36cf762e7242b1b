#pragma once

#include <optional>
#include <utility>

#include "lqrm/system.hpp"

namespace lqrm {

enum class NoiseLevel { low, high };

// Benchmark family: diffusion dynamics on a connected Erdos-Renyi graph,
// grounded at node 0, bilinearly discretized, with Gaussian noise directions
// and variances calibrated to an open-loop mean-square stable or unstable regime.
struct NetworkSpec {
  int n_nodes = 21;
  double p_er = 0.5;
  std::uint64_t seed = 0;
  double ts = 1.0;
  int noise_count_state = 2;
  int noise_count_input = 2;
  NoiseLevel noise_level = NoiseLevel::low;
  double calibration_margin = 0.05;  // target radius 1 -/+ margin
  // When set, (state, input) variances are used directly and no calibration runs.
  std::optional<std::pair<double, double>> explicit_scales;
};

// p for which an n-node ER graph is connected with probability ~ exp(-exp(-c)).
double er_connectivity_probability(int n, double c);

// Symmetric 0/1 adjacency with zero diagonal; re-samples (bounded retries,
// deterministic in seed) until the graph is connected.
Matrix erdos_renyi_adjacency(int n, double p, std::uint64_t seed, int max_retries = 64);

// Graph Laplacian with row/column 0 removed; positive definite for a
// connected graph. Throws on disconnected input.
Matrix grounded_laplacian(const Matrix& adjacency);

// Bilinear (Tustin) discretization:
//   A_d = (I - ts/2 A_c)^{-1} (I + ts/2 A_c),  B_d = (I - ts/2 A_c)^{-1} B_c ts.
std::pair<Matrix, Matrix> tustin_discretize(const Matrix& A_c, const Matrix& B_c, double ts);

enum class CalibrationTarget { stable_margin, unstable_margin };

struct NoiseVariances {
  std::vector<double> state;
  std::vector<double> input;
  double scale = 0.0;           // common multiplier applied to the baseline variances
  double achieved_radius = 0.0;
};

// Bisection on a common scale multiplying all baseline variances until the
// open-loop (K = 0) second-moment spectral radius hits 1 - margin or 1 + margin
// within 1e-6. The radius is nondecreasing in the scale.
NoiseVariances calibrate_noise_level(const MultiplicativeNoiseSystem& sys,
                                     CalibrationTarget target, double margin);

// Same dynamics, new noise variances.
MultiplicativeNoiseSystem with_variances(const MultiplicativeNoiseSystem& sys,
                                         const NoiseVariances& variances);

MultiplicativeNoiseSystem build_benchmark(const NetworkSpec& spec);

}  // namespace lqrm
