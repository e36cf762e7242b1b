#include "lqrm/experiment.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "figures.hpp"

namespace lqrm {

namespace {

[[noreturn]] void fail(const std::string& field_path, const std::string& what) {
  throw std::invalid_argument(field_path + ": " + what);
}

double get_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

SparsityGranularity granularity_for(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::L1: return SparsityGranularity::entry;
    case RegularizerKind::RowMax:
    case RegularizerKind::GroupLassoRow:
    case RegularizerKind::SparseGroupLassoRow: return SparsityGranularity::row;
    case RegularizerKind::ColMax:
    case RegularizerKind::GroupLassoCol:
    case RegularizerKind::SparseGroupLassoCol: return SparsityGranularity::column;
  }
  return SparsityGranularity::entry;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
}

nlohmann::json sparsity_to_json(const SparsityReport& report) {
  nlohmann::json j;
  j["granularity"] = to_string(report.granularity);
  j["threshold_ratio"] = report.threshold_ratio;
  j["sparsity_fraction"] = report.sparsity_fraction;
  auto& rows = j["pattern"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < report.pattern.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < report.pattern.cols(); ++k)
      row.push_back(static_cast<bool>(report.pattern(i, k)));
    rows.push_back(std::move(row));
  }
  return j;
}

}  // namespace

std::string to_string(SparsityGranularity g) {
  switch (g) {
    case SparsityGranularity::entry: return "entry";
    case SparsityGranularity::row: return "row";
    case SparsityGranularity::column: return "column";
  }
  throw std::logic_error("unknown granularity");
}

SparsityGranularity parse_granularity(const std::string& name) {
  if (name == "entry") return SparsityGranularity::entry;
  if (name == "row") return SparsityGranularity::row;
  if (name == "column") return SparsityGranularity::column;
  throw std::invalid_argument("unknown sparsity granularity: \"" + name + "\"");
}

SparsityReport sparsity_pattern(const Matrix& K, SparsityGranularity granularity, double ratio) {
  SparsityReport report;
  report.granularity = granularity;
  report.threshold_ratio = ratio;
  report.pattern.resize(K.rows(), K.cols());
  report.pattern.setConstant(false);

  if (granularity == SparsityGranularity::entry) {
    const double max_abs = K.size() ? K.cwiseAbs().maxCoeff() : 0.0;
    int sparse = 0;
    for (Eigen::Index i = 0; i < K.rows(); ++i)
      for (Eigen::Index j = 0; j < K.cols(); ++j)
        if (max_abs == 0.0 || std::abs(K(i, j)) < ratio * max_abs) {
          report.pattern(i, j) = true;
          ++sparse;
        }
    report.sparsity_fraction = K.size() ? double(sparse) / double(K.size()) : 0.0;
    return report;
  }

  const bool rows = granularity == SparsityGranularity::row;
  const Eigen::Index groups = rows ? K.rows() : K.cols();
  Vector norms(groups);
  for (Eigen::Index g = 0; g < groups; ++g)
    norms(g) = rows ? K.row(g).norm() : K.col(g).norm();
  const double max_norm = groups ? norms.maxCoeff() : 0.0;
  int sparse = 0;
  for (Eigen::Index g = 0; g < groups; ++g) {
    if (max_norm == 0.0 || norms(g) < ratio * max_norm) {
      ++sparse;
      if (rows)
        report.pattern.row(g).setConstant(true);
      else
        report.pattern.col(g).setConstant(true);
    }
  }
  report.sparsity_fraction = groups ? double(sparse) / double(groups) : 0.0;
  return report;
}

HardThresholdReport hard_threshold_demo(double threshold) {
  HardThresholdReport report;
  report.threshold = threshold;
  report.A.resize(3, 3);
  report.A << 0.4, 0.9, -0.3,
              0.7, -0.3, -0.4,
              -0.2, 0.1, -0.8;
  report.B.resize(3, 2);
  report.B << 0.2, -0.6,
              -1.3, -1.6,
              -0.3, -1.5;
  MultiplicativeNoiseSystem sys(report.A, report.B);
  CostSpec cost(Matrix::Identity(3, 3), Matrix::Identity(2, 2), Matrix::Identity(3, 3));
  const RiccatiSolution riccati = riccati_value_iteration(sys, cost);
  report.K_full = optimal_gain(sys, cost, riccati.P).K;
  report.K_thresholded = report.K_full.unaryExpr(
      [threshold](double v) { return std::abs(v) < threshold ? 0.0 : v; });

  auto closed_loop_radius = [&](const Matrix& K) {
    Eigen::EigenSolver<Matrix> es(report.A + report.B * K, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };
  report.full_radius = closed_loop_radius(report.K_full);
  report.thresholded_radius = closed_loop_radius(report.K_thresholded);
  report.thresholded_stable = report.thresholded_radius < 1.0;
  if (report.thresholded_stable)
    throw std::logic_error("hard_threshold_demo: thresholded gain unexpectedly stable");
  return report;
}

std::vector<LocalMinimum> find_local_minima(const std::function<double(double)>& f,
                                            double grid_lo, double grid_hi, int grid_points) {
  if (grid_points < 3) throw std::invalid_argument("find_local_minima: need >= 3 grid points");
  if (grid_hi <= grid_lo) throw std::invalid_argument("find_local_minima: empty interval");
  const double fd_h = 1e-5;
  auto slope = [&](double x) { return (f(x + fd_h) - f(x - fd_h)) / (2.0 * fd_h); };

  const double dx = (grid_hi - grid_lo) / (grid_points - 1);
  std::vector<double> values(grid_points);
  for (int i = 0; i < grid_points; ++i) values[i] = f(grid_lo + i * dx);

  std::vector<LocalMinimum> minima;
  for (int i = 1; i + 1 < grid_points; ++i) {
    if (!(values[i] < values[i - 1] && values[i] < values[i + 1])) continue;
    double lo = grid_lo + (i - 1) * dx;
    double hi = grid_lo + (i + 1) * dx;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (slope(mid) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    const double x = 0.5 * (lo + hi);
    minima.push_back({x, f(x)});
  }
  return minima;
}

std::vector<LocalMinimum> local_minima_demo(double grid_lo, double grid_hi, int grid_points) {
  return find_local_minima(
      [](double x) {
        const double s = std::sin(x - 8.0);
        return x * x + 4.0 * ((x - 8.0) * (x - 8.0) + 3.0 * s * s);
      },
      grid_lo, grid_hi, grid_points);
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) fail("config", "expected a JSON object");
  ExperimentConfig config;
  config.raw = j;

  int sources = 0;
  if (j.contains("system")) {
    config.system_inline = j.at("system");
    ++sources;
  }
  if (j.contains("system_file")) {
    if (!j.at("system_file").is_string()) fail("system_file", "expected a string");
    config.system_file = j.at("system_file").get<std::string>();
    ++sources;
  }
  if (j.contains("network")) {
    const auto& net = j.at("network");
    if (!net.is_object()) fail("network", "expected an object");
    NetworkSpec spec;
    if (net.contains("n_nodes")) spec.n_nodes = net.at("n_nodes").get<int>();
    if (net.contains("p_er"))
      spec.p_er = get_number(net.at("p_er"), "network.p_er");
    else if (net.contains("c"))
      spec.p_er = er_connectivity_probability(spec.n_nodes, get_number(net.at("c"), "network.c"));
    else
      fail("network", "needs p_er or c");
    if (net.contains("seed")) spec.seed = net.at("seed").get<std::uint64_t>();
    if (net.contains("ts")) spec.ts = get_number(net.at("ts"), "network.ts");
    if (net.contains("noise_count_state"))
      spec.noise_count_state = net.at("noise_count_state").get<int>();
    if (net.contains("noise_count_input"))
      spec.noise_count_input = net.at("noise_count_input").get<int>();
    if (net.contains("noise_level")) {
      const std::string level = net.at("noise_level").get<std::string>();
      if (level == "low")
        spec.noise_level = NoiseLevel::low;
      else if (level == "high")
        spec.noise_level = NoiseLevel::high;
      else
        fail("network.noise_level", "expected \"low\" or \"high\"");
    }
    if (net.contains("calibration_margin"))
      spec.calibration_margin = get_number(net.at("calibration_margin"),
                                           "network.calibration_margin");
    if (net.contains("explicit_scales")) {
      const auto& scales = net.at("explicit_scales");
      if (!scales.is_array() || scales.size() != 2)
        fail("network.explicit_scales", "expected [state_scale, input_scale]");
      spec.explicit_scales = {scales.at(0).get<double>(), scales.at(1).get<double>()};
    }
    config.network = spec;
    ++sources;
  }
  if (sources != 1)
    fail("config", "exactly one of system, system_file, network must be present");

  if (j.contains("cost")) {
    const auto& cost = j.at("cost");
    if (!cost.is_object()) fail("cost", "expected an object");
    if (cost.contains("Q")) config.Q = matrix_from_json(cost.at("Q"), "cost.Q");
    if (cost.contains("R")) config.R = matrix_from_json(cost.at("R"), "cost.R");
    if (cost.contains("Sigma0"))
      config.Sigma0 = matrix_from_json(cost.at("Sigma0"), "cost.Sigma0");
  }

  if (j.contains("regularizer")) {
    const auto& reg = j.at("regularizer");
    if (!reg.is_object()) fail("regularizer", "expected an object");
    if (reg.contains("kind")) {
      try {
        config.regularizer.kind = parse_regularizer_kind(reg.at("kind").get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail("regularizer.kind", e.what());
      }
    }
    if (reg.contains("gamma"))
      config.regularizer.gamma = get_number(reg.at("gamma"), "regularizer.gamma");
    if (reg.contains("mu")) config.regularizer.mu = get_number(reg.at("mu"), "regularizer.mu");
    if (reg.contains("huber_phi"))
      config.regularizer.huber_phi = get_number(reg.at("huber_phi"), "regularizer.huber_phi");
    try {
      config.regularizer.validate();
    } catch (const std::invalid_argument& e) {
      fail("regularizer", e.what());
    }
  }

  if (j.contains("optimizer")) {
    const auto& opt = j.at("optimizer");
    if (!opt.is_object()) fail("optimizer", "expected an object");
    if (opt.contains("method")) {
      try {
        config.method = parse_optim_method(opt.at("method").get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail("optimizer.method", e.what());
      }
    }
    if (opt.contains("eta")) config.optimizer.eta = get_number(opt.at("eta"), "optimizer.eta");
    if (opt.contains("max_iterations"))
      config.optimizer.max_iterations = opt.at("max_iterations").get<int>();
    if (opt.contains("grad_norm_tol_coeff"))
      config.optimizer.grad_norm_tol_coeff =
          get_number(opt.at("grad_norm_tol_coeff"), "optimizer.grad_norm_tol_coeff");
    if (opt.contains("best_hold_iterations"))
      config.optimizer.best_hold_iterations = opt.at("best_hold_iterations").get<int>();
    if (opt.contains("feasibility_backoff"))
      config.optimizer.feasibility_backoff =
          get_number(opt.at("feasibility_backoff"), "optimizer.feasibility_backoff");
    if (opt.contains("record_every"))
      config.optimizer.record_every = opt.at("record_every").get<int>();
  }
  config.optimizer.method = config.method;

  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    if (!sw.is_object()) fail("sweep", "expected an object");
    SweepConfig sweep;
    if (sw.contains("gamma0")) sweep.gamma0 = get_number(sw.at("gamma0"), "sweep.gamma0");
    if (sw.contains("r_gamma")) sweep.r_gamma = get_number(sw.at("r_gamma"), "sweep.r_gamma");
    if (sw.contains("eta0")) sweep.eta0 = get_number(sw.at("eta0"), "sweep.eta0");
    if (sw.contains("r_eta")) sweep.r_eta = get_number(sw.at("r_eta"), "sweep.r_eta");
    if (sw.contains("stages")) sweep.stages = sw.at("stages").get<int>();
    if (sweep.stages < 1) fail("sweep.stages", "must be >= 1");
    config.sweep = sweep;
  }

  if (j.contains("initial_gain")) {
    const std::string kind = j.at("initial_gain").get<std::string>();
    if (kind == "riccati")
      config.initial_gain = InitialGainKind::riccati;
    else if (kind == "zero")
      config.initial_gain = InitialGainKind::zero;
    else
      fail("initial_gain", "expected \"riccati\" or \"zero\"");
  }
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("mc")) {
    const auto& mc = j.at("mc");
    if (mc.contains("horizon")) config.mc_horizon = mc.at("horizon").get<int>();
    if (mc.contains("rollouts")) config.mc_rollouts = mc.at("rollouts").get<int>();
  }
  if (j.contains("output")) {
    const auto& output = j.at("output");
    if (!output.is_object()) fail("output", "expected an object");
    if (output.contains("dir")) config.output_dir = output.at("dir").get<std::string>();
  }
  return config;
}

MultiplicativeNoiseSystem load_system(const ExperimentConfig& config) {
  if (config.system_inline) return system_from_json(*config.system_inline, "system");
  if (config.system_file)
    return system_from_json(load_json(*config.system_file), "system_file:" + *config.system_file);
  return build_benchmark(*config.network);
}

ExperimentArtifacts run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "trajectories");
  fs::create_directories(out_dir / "gains");
  fs::create_directories(out_dir / "sparsity");
  fs::create_directories(out_dir / "figures");
  save_json(config.raw, out_dir / "config_echo.json");

  ExperimentArtifacts artifacts;
  artifacts.output_dir = out_dir;

  const MultiplicativeNoiseSystem sys = load_system(config);
  const int n = sys.state_dim(), m = sys.input_dim();
  const CostSpec cost(config.Q.value_or(Matrix::Identity(n, n)),
                      config.R.value_or(Matrix::Identity(m, m)),
                      config.Sigma0.value_or(Matrix::Identity(n, n)));

  Gain K0;
  if (config.initial_gain == InitialGainKind::zero) {
    K0 = Gain(Matrix::Zero(m, n));
  } else {
    const RiccatiSolution riccati = riccati_value_iteration(sys, cost);
    K0 = optimal_gain(sys, cost, riccati.P);
  }

  const SparsityGranularity granularity = granularity_for(config.regularizer.kind);
  auto stage_name = [](int s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "stage_%02d", s);
    return std::string(buf);
  };

  // Each gain is re-verified before it is written out.
  auto write_gain = [&](const fs::path& path, const Gain& K) {
    const StabilityReport report = is_mean_square_stable(sys, K);
    if (!report.stable)
      throw std::logic_error("run_experiment: refusing to write a non-stabilizing gain (radius " +
                             std::to_string(report.spectral_radius) + ")");
    nlohmann::json j = matrix_to_json(K.K);
    j["spectral_radius"] = report.spectral_radius;
    save_json(j, path);
  };

  auto flush_stage = [&](int s, double gamma, const RunResult& result) {
    const std::string name = stage_name(s);
    {
      std::ofstream csv(out_dir / "trajectories" / (name + ".csv"));
      write_trajectory_csv(result, csv);
    }
    write_gain(out_dir / "gains" / (name + "_best.json"), result.best_gain);
    const SparsityReport sparsity = sparsity_pattern(result.best_gain.K, granularity);
    save_json(sparsity_to_json(sparsity), out_dir / "sparsity" / (name + ".json"));
    write_text(out_dir / "sparsity" / (name + ".txt"), figures::sparsity_grid_ascii(sparsity));
    write_text(out_dir / "sparsity" / (name + ".svg"), figures::sparsity_grid_svg(sparsity));
    artifacts.stages.push_back({gamma, result.best_J, sparsity.sparsity_fraction,
                                result.wall_time_seconds, result.termination});
  };

  auto write_summary = [&]() {
    std::ofstream csv(out_dir / "summary.csv");
    csv << "gamma,J,sparsity_fraction,wall_time_s\n";
    char line[160];
    for (const auto& s : artifacts.stages) {
      std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.6f\n", s.gamma, s.J,
                    s.sparsity_fraction, s.wall_time_seconds);
      csv << line;
    }
    figures::Series cost_curve{"", {}, {}}, time_curve{"", {}, {}};
    for (const auto& s : artifacts.stages) {
      cost_curve.x.push_back(s.sparsity_fraction);
      cost_curve.y.push_back(s.J);
      time_curve.x.push_back(s.gamma);
      time_curve.y.push_back(s.wall_time_seconds);
    }
    write_text(out_dir / "figures" / "cost_vs_sparsity.svg",
               figures::line_plot_svg({cost_curve}, "sparsity fraction", "J"));
    write_text(out_dir / "figures" / "time_vs_gamma.svg",
               figures::line_plot_svg({time_curve}, "gamma", "wall time [s]", /*log_x=*/true));
  };

  Gain K = K0;
  try {
    if (config.sweep) {
      for (int s = 0; s < config.sweep->stages; ++s) {
        RegularizerSpec reg = config.regularizer;
        reg.gamma = config.sweep->gamma0 * std::pow(config.sweep->r_gamma, s);
        OptimizerConfig opt = config.optimizer;
        opt.eta = config.sweep->eta0 * std::pow(config.sweep->r_eta, s);
        RunResult result = run_optimizer(sys, cost, reg, K, opt, config.method);
        if (result.termination == Termination::infeasible_start)
          throw std::runtime_error("sweep stage " + std::to_string(s) +
                                   ": initial gain is not mean-square stabilizing");
        K = result.best_gain;
        flush_stage(s, reg.gamma, result);
      }
    } else {
      RunResult result =
          run_optimizer(sys, cost, config.regularizer, K, config.optimizer, config.method);
      if (result.termination == Termination::infeasible_start)
        throw std::runtime_error("initial gain is not mean-square stabilizing");
      K = result.best_gain;
      flush_stage(0, config.regularizer.gamma, result);
    }
  } catch (const std::exception& e) {
    // Flush what completed, then surface the failure.
    write_summary();
    save_json({{"error", e.what()}, {"stages_completed", artifacts.stages.size()}},
              out_dir / "error.json");
    throw;
  }

  write_summary();
  artifacts.final_gain = K;
  write_gain(out_dir / "final_gain.json", artifacts.final_gain);

  const CostEval final_cost = lqrm_cost(sys, cost, artifacts.final_gain);
  artifacts.analytic_J = final_cost.J;
  artifacts.validation = monte_carlo_simulate(sys, cost, artifacts.final_gain, config.mc_horizon,
                                              config.mc_rollouts, config.seed);
  nlohmann::json validation;
  validation["analytic_J"] = artifacts.analytic_J;
  validation["mc_estimate"] = artifacts.validation.cost_estimate;
  validation["mc_stderr"] = artifacts.validation.cost_stderr;
  validation["mc_diverged"] = artifacts.validation.diverged;
  validation["horizon"] = config.mc_horizon;
  validation["rollouts"] = config.mc_rollouts;
  validation["seed"] = config.seed;
  validation["within_3_stderr"] =
      std::abs(artifacts.validation.cost_estimate - artifacts.analytic_J) <=
      3.0 * artifacts.validation.cost_stderr;
  save_json(validation, out_dir / "validation.json");
  return artifacts;
}

}  // namespace lqrm
