#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "lqrm/optimizers.hpp"
#include "test_util.hpp"

using namespace lqrm;
using namespace lqrm::testing;

namespace {

Matrix scalar(double v) {
  Matrix m(1, 1);
  m << v;
  return m;
}

OptimizerConfig base_config(double eta, int max_iter) {
  OptimizerConfig config;
  config.eta = eta;
  config.max_iterations = max_iter;
  return config;
}

RegularizerSpec l1(double gamma, double phi = 0.0) {
  RegularizerSpec reg;
  reg.kind = RegularizerKind::L1;
  reg.gamma = gamma;
  reg.huber_phi = phi;
  return reg;
}

}  // namespace

TEST_CASE("unregularized gradient descent reaches the scalar optimum") {
  MultiplicativeNoiseSystem sys(scalar(1.0), scalar(1.0));
  CostSpec cost(scalar(1.0), scalar(1.0), scalar(1.0));
  OptimizerConfig config = base_config(0.05, 20000);
  config.grad_norm_tol_coeff = 1e-7;
  const RunResult result = run_gradient(sys, cost, l1(0.0), Gain(scalar(-0.2)), config);
  CHECK(result.termination == Termination::grad_norm);
  CHECK(result.final_gain.K(0, 0) == doctest::Approx(-0.618034).epsilon(1e-6));
  CHECK(result.final_stability.stable);
  CHECK(result.best_stability.stable);
  for (std::size_t i = 1; i < result.trajectory.size(); ++i)
    CHECK(result.trajectory[i].J < result.trajectory[i - 1].J);
}

TEST_CASE("a stationary start terminates immediately") {
  std::mt19937_64 gen(1);
  const auto sys = random_system(gen, 3, 2, 1, 1);
  const auto cost = identity_cost(3, 2);
  const RiccatiSolution sol = riccati_value_iteration(sys, cost);
  const Gain Kstar = optimal_gain(sys, cost, sol.P);
  const RunResult result = run_gradient(sys, cost, l1(0.0), Kstar, base_config(1e-3, 100));
  CHECK(result.termination == Termination::grad_norm);
  CHECK(result.trajectory.size() == 1);
  CHECK(result.final_gain.K == Kstar.K);
}

TEST_CASE("with gamma = 0 all three methods produce the same trajectory") {
  std::mt19937_64 gen(2);
  const auto sys = random_system(gen, 3, 2, 1, 1);
  const auto cost = identity_cost(3, 2);
  const Gain K0 = random_stabilizing_gain(gen, sys, cost);

  OptimizerConfig grad_cfg = base_config(5e-3, 40);
  grad_cfg.grad_norm_tol_coeff = 0.0;  // never triggers
  OptimizerConfig hold_cfg = base_config(5e-3, 40);
  hold_cfg.best_hold_iterations = 1000;

  const RunResult g = run_gradient(sys, cost, l1(0.0), K0, grad_cfg);
  const RunResult s = run_subgradient(sys, cost, l1(0.0), K0, hold_cfg);
  const RunResult p = run_proximal(sys, cost, l1(0.0), K0, hold_cfg);
  REQUIRE(g.trajectory.size() == s.trajectory.size());
  REQUIRE(g.trajectory.size() == p.trajectory.size());
  for (std::size_t i = 0; i < g.trajectory.size(); ++i) {
    CHECK(g.trajectory[i].J == s.trajectory[i].J);
    CHECK(g.trajectory[i].J == p.trajectory[i].J);
    CHECK(g.trajectory[i].grad_norm == s.trajectory[i].grad_norm);
  }
  CHECK(g.final_gain.K == s.final_gain.K);
  CHECK(g.final_gain.K == p.final_gain.K);
}

TEST_CASE("one proximal step is the soft threshold of the gradient step") {
  std::mt19937_64 gen(3);
  const auto sys = random_system(gen, 3, 2, 1, 1);
  const auto cost = identity_cost(3, 2);
  const Gain K0 = random_stabilizing_gain(gen, sys, cost);
  const RegularizerSpec reg = l1(2.0);
  OptimizerConfig config = base_config(1e-3, 1);
  config.best_hold_iterations = 1000;
  const RunResult result = run_proximal(sys, cost, reg, K0, config);
  REQUIRE(result.termination == Termination::max_iter);
  const Matrix grad = lqrm_gradient(sys, cost, K0);
  const Matrix manual = reg_prox(Matrix(K0.K - config.eta * grad), reg, config.eta * reg.gamma);
  CHECK((result.final_gain.K - manual).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("large L1 weight shrinks the gain and increases sparsity") {
  std::mt19937_64 gen(4);
  const auto sys = random_system(gen, 3, 2, 1, 1, 0.85);
  const auto cost = identity_cost(3, 2);
  const Gain K0(Matrix::Zero(2, 3));

  OptimizerConfig config = base_config(2e-3, 4000);
  config.best_hold_iterations = 200;
  const RunResult free_run = run_subgradient(sys, cost, l1(0.0), K0, config);
  const RunResult reg_run = run_subgradient(sys, cost, l1(5.0), K0, config);
  CHECK(reg_run.best_gain.K.cwiseAbs().sum() < free_run.best_gain.K.cwiseAbs().sum());
  CHECK(reg_run.best_stability.stable);

  // best-hold bookkeeping: the best iterate is held for the configured window
  CHECK(reg_run.termination == Termination::best_hold);
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < reg_run.trajectory.size(); ++i)
    if (reg_run.trajectory[i].total_cost < reg_run.trajectory[best_idx].total_cost) best_idx = i;
  CHECK(reg_run.trajectory.back().iteration - reg_run.trajectory[best_idx].iteration >=
        config.best_hold_iterations);
}

TEST_CASE("the best-iterate cost sequence is nonincreasing by construction") {
  std::mt19937_64 gen(5);
  const auto sys = random_system(gen, 3, 2, 1, 1);
  const auto cost = identity_cost(3, 2);
  OptimizerConfig config = base_config(5e-3, 500);
  config.best_hold_iterations = 100;
  const RunResult result =
      run_subgradient(sys, cost, l1(1.0), random_stabilizing_gain(gen, sys, cost), config);
  double best = std::numeric_limits<double>::infinity();
  double tracked_best = best;
  for (const auto& r : result.trajectory) {
    best = std::min(best, r.total_cost);
    tracked_best = std::min(tracked_best, best);
    CHECK(best <= tracked_best + 1e-15);
  }
  CHECK(result.best_cost == doctest::Approx(best));
  CHECK(result.best_cost <= result.trajectory.front().total_cost);
}

TEST_CASE("a non-stabilizing start is reported, not stepped") {
  MultiplicativeNoiseSystem sys(scalar(2.0), scalar(1.0));
  CostSpec cost(scalar(1.0), scalar(1.0), scalar(1.0));
  const RunResult result =
      run_gradient(sys, cost, l1(0.0), Gain(scalar(1.5)), base_config(1e-2, 100));
  CHECK(result.termination == Termination::infeasible_start);
  CHECK(std::isinf(result.best_cost));
  CHECK_FALSE(result.final_stability.stable);
}

TEST_CASE("the feasibility guard backs the step size off per step") {
  MultiplicativeNoiseSystem sys(scalar(0.5), scalar(1.0));
  CostSpec cost(scalar(1.0), scalar(1.0), scalar(1.0));
  const RunResult result =
      run_gradient(sys, cost, l1(0.0), Gain(scalar(0.0)), base_config(10.0, 3));
  CHECK(result.termination == Termination::max_iter);
  CHECK(result.final_stability.stable);
  bool backed_off = false;
  for (const auto& r : result.trajectory) {
    CHECK(r.eta <= 10.0);
    if (r.eta < 10.0) backed_off = true;
  }
  CHECK(backed_off);
}

TEST_CASE("method preconditions are enforced") {
  MultiplicativeNoiseSystem sys(scalar(0.5), scalar(1.0));
  CostSpec cost(scalar(1.0), scalar(1.0), scalar(1.0));
  const Gain K0(scalar(0.0));
  CHECK_THROWS_AS(run_gradient(sys, cost, l1(1.0, 0.0), K0, base_config(1e-3, 10)),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_subgradient(sys, cost, l1(1.0, 0.1), K0, base_config(1e-3, 10)),
                  std::invalid_argument);
  RegularizerSpec rowmax;
  rowmax.kind = RegularizerKind::RowMax;
  rowmax.gamma = 1.0;
  CHECK_THROWS_AS(run_proximal(sys, cost, rowmax, K0, base_config(1e-3, 10)),
                  UnsupportedProxError);
  CHECK_THROWS_AS(run_gradient(sys, cost, l1(0.0), K0, base_config(-1.0, 10)),
                  std::invalid_argument);
}

TEST_CASE("a one-stage sweep is a single run") {
  std::mt19937_64 gen(6);
  const auto sys = random_system(gen, 3, 2, 1, 1);
  const auto cost = identity_cost(3, 2);
  const Gain K0 = random_stabilizing_gain(gen, sys, cost);
  SweepConfig sweep;
  sweep.gamma0 = 2.0;
  sweep.eta0 = 2e-3;
  sweep.stages = 1;
  OptimizerConfig config = base_config(999.0, 300);  // eta comes from the sweep schedule
  config.best_hold_iterations = 60;
  const auto stages =
      gamma_sweep(sys, cost, l1(0.0), K0, OptimMethod::subgradient, sweep, config);
  REQUIRE(stages.size() == 1);
  CHECK(stages[0].first == doctest::Approx(2.0));
  OptimizerConfig single = config;
  single.eta = sweep.eta0;
  const RunResult direct = run_subgradient(sys, cost, l1(2.0), K0, single);
  CHECK(stages[0].second.best_cost == doctest::Approx(direct.best_cost));
  CHECK(stages[0].second.best_gain.K == direct.best_gain.K);
}

TEST_CASE("the sweep follows the gamma and eta schedules and warm starts") {
  std::mt19937_64 gen(7);
  const auto sys = random_system(gen, 3, 2, 1, 1, 0.85);
  const auto cost = identity_cost(3, 2);
  const Gain K0(Matrix::Zero(2, 3));
  SweepConfig sweep;
  sweep.gamma0 = 1.0;
  sweep.eta0 = 2e-3;
  sweep.stages = 3;
  OptimizerConfig config = base_config(1.0, 250);
  config.best_hold_iterations = 50;
  const auto stages =
      gamma_sweep(sys, cost, l1(0.0), K0, OptimMethod::subgradient, sweep, config);
  REQUIRE(stages.size() == 3);
  for (int s = 0; s < 3; ++s) {
    CHECK(stages[s].first == doctest::Approx(sweep.gamma0 * std::pow(sweep.r_gamma, s)));
    CHECK(stages[s].second.trajectory.front().eta ==
          doctest::Approx(sweep.eta0 * std::pow(sweep.r_eta, s)));
    // descent-or-equal: the best never exceeds the stage's own starting cost
    CHECK(stages[s].second.best_cost <=
          stages[s].second.trajectory.front().total_cost + 1e-12);
    CHECK(stages[s].second.best_stability.stable);
  }
  // warm start: stage s+1 begins at stage s's best gain
  for (int s = 1; s < 3; ++s)
    CHECK(stages[s].second.trajectory.front().J ==
          doctest::Approx(stages[s - 1].second.best_J).epsilon(1e-7));
}

TEST_CASE("sweep failures carry the stage index") {
  MultiplicativeNoiseSystem sys(scalar(0.5), scalar(1.0));
  CostSpec cost(scalar(1.0), scalar(1.0), scalar(1.0));
  RegularizerSpec rowmax;
  rowmax.kind = RegularizerKind::RowMax;
  SweepConfig sweep;
  sweep.stages = 2;
  CHECK_THROWS_WITH_AS(gamma_sweep(sys, cost, rowmax, Gain(scalar(0.0)), OptimMethod::proximal,
                                   sweep, base_config(1e-3, 10)),
                       doctest::Contains("stage 0"), std::runtime_error);
}

TEST_CASE("convergence-rate diagnostic") {
  std::mt19937_64 gen(8);
  const auto sys = random_system(gen, 3, 2, 1, 1);
  const auto cost = identity_cost(3, 2);
  const Gain K0 = random_stabilizing_gain(gen, sys, cost);

  const auto report = verify_convergence_rate(sys, cost, K0, 1e-3, 40);
  CHECK_FALSE(report.converged_at_start);
  CHECK(!report.ratios.empty());
  for (double r : report.ratios) CHECK(r < 1.0);

  // scalar instance: for small enough eta every ratio obeys the linear-rate bound
  MultiplicativeNoiseSystem sc(scalar(0.5), scalar(1.0));
  CostSpec sc_cost(scalar(1.0), scalar(1.0), scalar(1.0));
  double eta = 0.2;
  bool bounded = false;
  for (int halvings = 0; halvings < 20 && !bounded; ++halvings, eta *= 0.5) {
    const auto sc_report = verify_convergence_rate(sc, sc_cost, Gain(scalar(0.1)), eta, 30);
    bounded = !sc_report.ratios.empty();
    for (double r : sc_report.ratios)
      if (r > sc_report.rate_bound + 1e-9) bounded = false;
  }
  CHECK(bounded);

  const RiccatiSolution sol = riccati_value_iteration(sys, cost);
  const Gain Kstar = optimal_gain(sys, cost, sol.P);
  CHECK(verify_convergence_rate(sys, cost, Kstar, 1e-3, 10).converged_at_start);
}

TEST_CASE("trajectories serialize to CSV") {
  MultiplicativeNoiseSystem sys(scalar(0.5), scalar(1.0));
  CostSpec cost(scalar(1.0), scalar(1.0), scalar(1.0));
  const RunResult result =
      run_gradient(sys, cost, l1(0.0), Gain(scalar(0.0)), base_config(0.05, 5));
  std::ostringstream out;
  write_trajectory_csv(result, out);
  const std::string csv = out.str();
  CHECK(csv.rfind("iter,J,reg,C,grad_norm,eta\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == int(result.trajectory.size()) + 1);
}

TEST_CASE("record_every thins the trajectory but keeps the final iterate") {
  std::mt19937_64 gen(9);
  const auto sys = random_system(gen, 3, 2, 1, 1);
  const auto cost = identity_cost(3, 2);
  OptimizerConfig config = base_config(1e-3, 20);
  config.grad_norm_tol_coeff = 0.0;
  config.record_every = 7;
  const RunResult result =
      run_gradient(sys, cost, l1(0.0), random_stabilizing_gain(gen, sys, cost), config);
  REQUIRE(!result.trajectory.empty());
  CHECK(result.trajectory.back().iteration == 20);
  for (std::size_t i = 0; i + 1 < result.trajectory.size(); ++i)
    CHECK(result.trajectory[i].iteration % 7 == 0);
}
