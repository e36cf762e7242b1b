#pragma once

#include <filesystem>

#include <json.hpp>

#include "lqrm/network.hpp"
#include "lqrm/optimizers.hpp"
#include "lqrm/serialization.hpp"

namespace lqrm {

enum class SparsityGranularity { entry, row, column };

std::string to_string(SparsityGranularity g);
SparsityGranularity parse_granularity(const std::string& name);

struct SparsityReport {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> pattern;  // true = structurally zero
  double sparsity_fraction = 0.0;  // over entries, rows, or columns per granularity
  SparsityGranularity granularity = SparsityGranularity::entry;
  double threshold_ratio = 0.05;
};

// Entry granularity: sparse iff |K_ij| < ratio * max |K|; row/column granularity
// compares group 2-norms against the largest group norm. A zero gain is fully
// sparse by convention.
SparsityReport sparsity_pattern(const Matrix& K, SparsityGranularity granularity,
                                double ratio = 0.05);

struct HardThresholdReport {
  Matrix A;
  Matrix B;
  Matrix K_full;         // Riccati gain
  Matrix K_thresholded;  // entries below the threshold set to zero
  double threshold = 0.4;
  double full_radius = 0.0;         // max |eig(A + B K_full)|
  double thresholded_radius = 0.0;  // max |eig(A + B K_thresholded)|
  bool thresholded_stable = true;
};

// 3-state / 2-input example where hard-thresholding the Riccati gain
// destabilizes the closed loop. Throws if the destabilization does not occur.
HardThresholdReport hard_threshold_demo(double threshold = 0.4);

struct LocalMinimum {
  double x = 0.0;
  double f = 0.0;
};

// Interior local minima of f on [lo, hi]: grid scan for slope sign changes,
// each refined by bisection on a finite-difference derivative.
std::vector<LocalMinimum> find_local_minima(const std::function<double(double)>& f, double lo,
                                            double hi, int grid_points);

// find_local_minima applied to f(x) = x^2 + 4((x-8)^2 + 3 sin^2(x-8)): the sum
// of a strongly convex and a gradient-dominated term, with two separated local
// minima on [0, 12].
std::vector<LocalMinimum> local_minima_demo(double grid_lo = 0.0, double grid_hi = 12.0,
                                            int grid_points = 100001);

enum class InitialGainKind { riccati, zero };

struct ExperimentConfig {
  // Exactly one system source.
  std::optional<nlohmann::json> system_inline;
  std::optional<std::string> system_file;
  std::optional<NetworkSpec> network;

  std::optional<Matrix> Q, R, Sigma0;  // default identity
  OptimMethod method = OptimMethod::subgradient;
  RegularizerSpec regularizer;
  OptimizerConfig optimizer;
  std::optional<SweepConfig> sweep;
  InitialGainKind initial_gain = InitialGainKind::riccati;
  std::uint64_t seed = 0;
  int mc_horizon = 500;
  int mc_rollouts = 10000;
  std::string output_dir = "out";
  nlohmann::json raw;  // original document, echoed into the artifact bundle
};

// Parses and validates a config, reporting errors with field paths.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);

MultiplicativeNoiseSystem load_system(const ExperimentConfig& config);

struct StageSummary {
  double gamma = 0.0;
  double J = 0.0;  // unpolished cost of the stage's best gain
  double sparsity_fraction = 0.0;
  double wall_time_seconds = 0.0;
  Termination termination = Termination::max_iter;
};

struct ExperimentArtifacts {
  std::vector<StageSummary> stages;
  Gain final_gain;
  MonteCarloResult validation;
  double analytic_J = 0.0;
  std::filesystem::path output_dir;
};

// Runs the configured solve or sweep and writes the artifact bundle: config
// echo, per-stage trajectory CSVs, gain JSONs, sparsity reports (JSON, ASCII
// and SVG grids), a summary CSV, summary figures, and a Monte Carlo validation
// record for the final gain. Partial results are flushed if a stage fails.
ExperimentArtifacts run_experiment(const ExperimentConfig& config);

}  // namespace lqrm
