// Command-line front end: regularized gain solves and sweeps, benchmark
// network generation, the two counterexample demos, and Monte Carlo
// validation of analytic costs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "lqrm/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "seed override");
}

lqrm::ExperimentConfig load_config(const CommonOpts& opts) {
  auto config = lqrm::parse_experiment_config(lqrm::load_json(opts.config_path));
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  if (opts.seed) {
    config.seed = *opts.seed;
    if (config.network) config.network->seed = *opts.seed;
  }
  return config;
}

void print_matrix(const char* name, const lqrm::Matrix& M) {
  std::printf("%s =\n", name);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) std::printf(" % .6f", M(i, j));
    std::printf("\n");
  }
}

int run_solve_or_sweep(const CommonOpts& opts, bool sweep) {
  auto config = load_config(opts);
  if (sweep && !config.sweep) config.sweep = lqrm::SweepConfig{};
  if (!sweep) config.sweep.reset();
  const auto artifacts = lqrm::run_experiment(config);
  std::printf("%-10s %-12s %-10s %-10s %s\n", "gamma", "J", "sparsity", "time[s]", "termination");
  for (const auto& s : artifacts.stages)
    std::printf("%-10.4g %-12.6g %-10.4f %-10.2f %s\n", s.gamma, s.J, s.sparsity_fraction,
                s.wall_time_seconds, lqrm::to_string(s.termination).c_str());
  std::printf("analytic J(final) = %.8g, monte carlo %.8g +- %.3g\n", artifacts.analytic_J,
              artifacts.validation.cost_estimate, artifacts.validation.cost_stderr);
  std::printf("artifacts: %s\n", artifacts.output_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse feedback gain design for linear systems with multiplicative noise"};
  app.require_subcommand(1);

  CommonOpts solve_opts, sweep_opts, network_opts, validate_opts;
  auto* solve_cmd = app.add_subcommand("solve", "single regularized solve from a config");
  add_common(solve_cmd, solve_opts);
  auto* sweep_cmd = app.add_subcommand("sweep", "warm-started gamma sweep from a config");
  add_common(sweep_cmd, sweep_opts);

  auto* network_cmd = app.add_subcommand("network", "generate and save a benchmark network");
  add_common(network_cmd, network_opts, /*config_required=*/false);
  int net_nodes = 21;
  double net_c = 7.0;
  std::optional<double> net_p;
  double net_ts = 1.0, net_margin = 0.05;
  std::string net_level = "low";
  network_cmd->add_option("--nodes", net_nodes, "number of graph nodes");
  network_cmd->add_option("--c", net_c, "connectivity offset, p = (log n + c)/n");
  network_cmd->add_option("--p", net_p, "edge probability (overrides --c)");
  network_cmd->add_option("--ts", net_ts, "sampling period");
  network_cmd->add_option("--level", net_level, "noise level: low|high")
      ->check(CLI::IsMember({"low", "high"}));
  network_cmd->add_option("--margin", net_margin, "calibration margin on the radius");

  auto* thr_cmd = app.add_subcommand("demo-threshold", "hard-thresholded Riccati gain demo");
  std::string thr_out;
  thr_cmd->add_option("--out", thr_out, "write the report JSON here");
  double thr_value = 0.4;
  thr_cmd->add_option("--threshold", thr_value, "hard threshold");

  auto* minima_cmd = app.add_subcommand("demo-minima", "two-local-minima demo");
  std::string minima_out;
  double grid_lo = 0.0, grid_hi = 12.0;
  int grid_points = 100001;
  minima_cmd->add_option("--out", minima_out, "write the report JSON here");
  minima_cmd->add_option("--lo", grid_lo, "grid start");
  minima_cmd->add_option("--hi", grid_hi, "grid end");
  minima_cmd->add_option("--points", grid_points, "grid points");

  auto* validate_cmd =
      app.add_subcommand("validate", "Monte Carlo validation of the analytic cost");
  add_common(validate_cmd, validate_opts);
  std::string gain_file;
  validate_cmd->add_option("--gain", gain_file, "gain matrix JSON (default: Riccati gain)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return run_solve_or_sweep(solve_opts, /*sweep=*/false);
    if (sweep_cmd->parsed()) return run_solve_or_sweep(sweep_opts, /*sweep=*/true);

    if (network_cmd->parsed()) {
      lqrm::NetworkSpec spec;
      if (!network_opts.config_path.empty()) {
        auto config = lqrm::parse_experiment_config(lqrm::load_json(network_opts.config_path));
        if (!config.network)
          throw std::invalid_argument("network: config has no \"network\" section");
        spec = *config.network;
      } else {
        spec.n_nodes = net_nodes;
        spec.p_er = net_p ? *net_p : lqrm::er_connectivity_probability(net_nodes, net_c);
        spec.ts = net_ts;
        spec.noise_level = net_level == "low" ? lqrm::NoiseLevel::low : lqrm::NoiseLevel::high;
        spec.calibration_margin = net_margin;
      }
      if (network_opts.seed) spec.seed = *network_opts.seed;
      const auto sys = lqrm::build_benchmark(spec);
      const fs::path out_dir = network_opts.out_dir.empty() ? "out" : network_opts.out_dir;
      fs::create_directories(out_dir);
      lqrm::save_json(lqrm::system_to_json(sys), out_dir / "system.json");
      const lqrm::Gain zero(lqrm::Matrix::Zero(sys.input_dim(), sys.state_dim()));
      const double open_loop_radius =
          lqrm::SecondMomentOperator(sys, zero).spectral_radius_power(1e-9);
      std::printf("state dim %d, input dim %d, open-loop second-moment radius %.6f\n",
                  sys.state_dim(), sys.input_dim(), open_loop_radius);
      std::printf("saved %s\n", (out_dir / "system.json").string().c_str());
      return 0;
    }

    if (thr_cmd->parsed()) {
      const auto report = lqrm::hard_threshold_demo(thr_value);
      print_matrix("A", report.A);
      print_matrix("B", report.B);
      print_matrix("K (Riccati)", report.K_full);
      print_matrix("K (thresholded)", report.K_thresholded);
      std::printf("closed-loop radius: %.6f (Riccati), %.6f (thresholded)\n", report.full_radius,
                  report.thresholded_radius);
      std::printf("thresholding destabilizes the closed loop: %s\n",
                  report.thresholded_stable ? "no" : "yes");
      if (!thr_out.empty()) {
        json j;
        j["A"] = lqrm::matrix_to_json(report.A);
        j["B"] = lqrm::matrix_to_json(report.B);
        j["K_full"] = lqrm::matrix_to_json(report.K_full);
        j["K_thresholded"] = lqrm::matrix_to_json(report.K_thresholded);
        j["threshold"] = report.threshold;
        j["full_radius"] = report.full_radius;
        j["thresholded_radius"] = report.thresholded_radius;
        lqrm::save_json(j, thr_out);
      }
      return 0;
    }

    if (minima_cmd->parsed()) {
      const auto minima = lqrm::local_minima_demo(grid_lo, grid_hi, grid_points);
      std::printf("local minima on [%g, %g]: %zu\n", grid_lo, grid_hi, minima.size());
      for (const auto& m : minima) std::printf("  x = %.6f, f = %.6f\n", m.x, m.f);
      if (!minima_out.empty()) {
        json j = json::array();
        for (const auto& m : minima) j.push_back({{"x", m.x}, {"f", m.f}});
        lqrm::save_json(j, minima_out);
      }
      return 0;
    }

    if (validate_cmd->parsed()) {
      auto config = load_config(validate_opts);
      const auto sys = lqrm::load_system(config);
      const int n = sys.state_dim(), m = sys.input_dim();
      const lqrm::CostSpec cost(config.Q.value_or(lqrm::Matrix::Identity(n, n)),
                                config.R.value_or(lqrm::Matrix::Identity(m, m)),
                                config.Sigma0.value_or(lqrm::Matrix::Identity(n, n)));
      lqrm::Gain K;
      if (!gain_file.empty()) {
        K = lqrm::Gain(lqrm::matrix_from_json(lqrm::load_json(gain_file), "gain"));
      } else {
        const auto riccati = lqrm::riccati_value_iteration(sys, cost);
        K = lqrm::optimal_gain(sys, cost, riccati.P);
      }
      const auto eval = lqrm::lqrm_cost(sys, cost, K);
      const auto mc = lqrm::monte_carlo_simulate(sys, cost, K, config.mc_horizon,
                                                 config.mc_rollouts, config.seed);
      const bool within = std::abs(mc.cost_estimate - eval.J) <= 3.0 * mc.cost_stderr;
      std::printf("analytic J = %.8g\n", eval.J);
      std::printf("monte carlo (horizon %d, %d rollouts, seed %llu): %.8g +- %.3g%s\n",
                  config.mc_horizon, config.mc_rollouts,
                  static_cast<unsigned long long>(config.seed), mc.cost_estimate, mc.cost_stderr,
                  mc.diverged ? " [diverged]" : "");
      std::printf("analytic within 3 standard errors: %s\n", within ? "yes" : "no");
      if (!validate_opts.out_dir.empty()) {
        fs::create_directories(validate_opts.out_dir);
        json j{{"analytic_J", eval.J},       {"mc_estimate", mc.cost_estimate},
               {"mc_stderr", mc.cost_stderr}, {"mc_diverged", mc.diverged},
               {"horizon", config.mc_horizon}, {"rollouts", config.mc_rollouts},
               {"seed", config.seed},          {"within_3_stderr", within}};
        lqrm::save_json(j, fs::path(validate_opts.out_dir) / "validation.json");
      }
      return 0;
    }
  } catch (const std::exception& e) {
    json err{{"error", e.what()}};
    std::cout << err.dump() << "\n";
    return 1;
  }
  return 0;
}
