// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run on fixed seeds so every number here is reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <vector>

#include <omp.h>

#include "lqrm/experiment.hpp"
#include "test_util.hpp"

using namespace lqrm;
using namespace lqrm::testing;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

void note(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  g_notes.emplace_back(buf);
}

template <typename F>
void criterion(int number, const char* name, F&& body) {
  g_notes.clear();
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string error;
  try {
    ok = body();
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] criterion %d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", number, name, seconds);
  for (const auto& n : g_notes) std::printf("       %s\n", n.c_str());
  if (!error.empty()) std::printf("       exception: %s\n", error.c_str());
  if (!ok) ++g_failures;
  std::fflush(stdout);
}

Matrix scalar(double v) {
  Matrix m(1, 1);
  m << v;
  return m;
}

// ---------------------------------------------------------------------------

bool criterion1_hard_threshold() {
  const auto t0 = std::chrono::steady_clock::now();
  const HardThresholdReport report = hard_threshold_demo(0.4);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // FIXME: these reference values are not reproducible from the system
  // matrices stated with them; the destabilization itself reproduces (radius
  // 1.076882 > 1) but the gain entries and the 1.048223 radius appear to come
  // from a different instance. Kept as published pending reconciliation.
  Matrix expected(2, 3);
  expected << 0.503931, -0.880322, 0.0,
              0.0, 0.614382, -0.677758;
  const double expected_radius = 1.048223;

  const double entry_err = (report.K_thresholded - expected).cwiseAbs().maxCoeff();
  const bool entries_ok = entry_err <= 1e-4;
  const bool radius_ok = std::abs(report.thresholded_radius - expected_radius) <= 1e-5;
  const bool destabilized = !report.thresholded_stable;
  const bool fast = seconds < 1.0;

  note("thresholded gain vs reference: max entry gap %.6f (limit 1e-4) -> %s", entry_err,
       entries_ok ? "ok" : "FAIL");
  note("actual thresholded K = [[%.6f, %.6f, %.6f], [%.6f, %.6f, %.6f]]",
       report.K_thresholded(0, 0), report.K_thresholded(0, 1), report.K_thresholded(0, 2),
       report.K_thresholded(1, 0), report.K_thresholded(1, 1), report.K_thresholded(1, 2));
  note("closed-loop radius %.6f vs reference %.6f (limit 1e-5) -> %s", report.thresholded_radius,
       expected_radius, radius_ok ? "ok" : "FAIL");
  note("thresholding destabilizes (radius > 1): %s", destabilized ? "ok" : "FAIL");
  note("runtime %.3fs (limit 1s) -> %s", seconds, fast ? "ok" : "FAIL");
  return entries_ok && radius_ok && destabilized && fast;
}

bool criterion2_local_minima() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto minima = local_minima_demo(0.0, 12.0, 100001);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool count_ok = minima.size() == 2;
  bool locations_ok = count_ok;
  if (count_ok) {
    locations_ok = std::abs(minima[0].x - 5.372) <= 1e-3 && std::abs(minima[1].x - 7.459) <= 1e-3;
    note("minima at x = %.6f and x = %.6f (references 5.372, 7.459 +- 1e-3)", minima[0].x,
         minima[1].x);
  } else {
    note("found %zu minima, expected exactly 2", minima.size());
  }
  note("runtime %.3fs (limit 1s)", seconds);
  return count_ok && locations_ok && seconds < 1.0;
}

bool criterion3_gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(301);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + int(gen() % 5);  // 2..6
    const int m = 1 + int(gen() % 4);  // 1..4
    const int p = int(gen() % 3), q = int(gen() % 3);
    const auto sys = random_system(gen, n, m, p, q, 0.85);
    const auto cost = random_cost(gen, n, m);
    const Gain K = random_stabilizing_gain(gen, sys, cost);
    const Matrix analytic = lqrm_gradient(sys, cost, K);
    const Matrix fd = fd_gradient(sys, cost, K);
    const double scale = std::max(1e-12, analytic.cwiseAbs().maxCoeff());
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff() / scale);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  note("50 instances, worst relative gradient error %.3g (limit 1e-5)", worst);
  note("runtime %.2fs (limit 30s)", seconds);
  return worst < 1e-5 && seconds < 30.0;
}

bool criterion4_solver_consistency() {
  std::mt19937_64 gen(401);
  double worst_duality = 0.0, worst_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + int(gen() % 4);
    const int m = 1 + int(gen() % 3);
    const auto sys = random_system(gen, n, m, int(gen() % 3), int(gen() % 3), 0.85);
    const auto cost = random_cost(gen, n, m);
    const Gain K = random_stabilizing_gain(gen, sys, cost);

    SolveOptions direct{SolveMethod::direct_vectorized};
    SolveOptions fixed{SolveMethod::fixed_point, 1e-13, 300000};
    const Matrix P = solve_cost_lyapunov(sys, cost, K, direct);
    const Matrix Sigma = solve_covariance_lyapunov(sys, cost.Sigma0, K, direct);
    const double via_p = (P * cost.Sigma0).trace();
    const double via_sigma = ((cost.Q + K.K.transpose() * cost.R * K.K) * Sigma).trace();
    worst_duality = std::max(worst_duality, std::abs(via_p - via_sigma) / std::abs(via_p));

    const Matrix Pf = solve_cost_lyapunov(sys, cost, K, fixed);
    const Matrix Sf = solve_covariance_lyapunov(sys, cost.Sigma0, K, fixed);
    worst_gap = std::max(worst_gap, (P - Pf).norm() / std::max(1.0, P.norm()));
    worst_gap = std::max(worst_gap, (Sigma - Sf).norm() / std::max(1.0, Sigma.norm()));
  }
  note("worst trace-duality gap %.3g (limit 1e-9)", worst_duality);
  note("worst direct vs fixed-point gap %.3g (limit 1e-10)", worst_gap);
  return worst_duality < 1e-9 && worst_gap < 1e-10;
}

bool criterion5_optimality_agreement() {
  std::mt19937_64 gen(501);
  bool all_ok = true;
  for (int n : {3, 5, 8, 10}) {
    const int m = std::max(1, n / 2);
    const auto sys = random_system(gen, n, m, 1, 1, 0.85);
    const auto cost = identity_cost(n, m);
    const RiccatiSolution sol = riccati_value_iteration(sys, cost);
    const Gain Kstar = optimal_gain(sys, cost, sol.P);
    const double J_star = (sol.P * cost.Sigma0).trace();
    const Gain K0 = random_stabilizing_gain(gen, sys, cost, 0.2);

    // Lemma-2 constant: stopping once ||grad|| falls below this threshold
    // certifies a relative gap of at most 1e-4.
    const Matrix sigma_star = solve_covariance_lyapunov(sys, cost.Sigma0, Kstar);
    Eigen::SelfAdjointEigenSolver<Matrix> ess(sigma_star, Eigen::EigenvaluesOnly);
    const double c_dom = ess.eigenvalues().maxCoeff() / 4.0;  // R = Sigma0 = I
    const double grad_threshold = 0.5 * std::sqrt(1e-4 * J_star / c_dom);

    RegularizerSpec none;
    OptimizerConfig config;
    config.max_iterations = 60000;
    config.grad_norm_tol_coeff = grad_threshold / (m * n);

    bool instance_ok = false;
    double eta = 0.1;
    for (int attempt = 0; attempt < 12 && !instance_ok; ++attempt, eta *= 0.5) {
      config.eta = eta;
      const RunResult run = run_gradient(sys, cost, none, K0, config);
      if (run.termination != Termination::grad_norm) continue;
      bool monotone = true;
      bool dominated = true;
      for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
        if (i > 0 && !(run.trajectory[i].J < run.trajectory[i - 1].J)) monotone = false;
        const double gap = run.trajectory[i].J - J_star;
        const double g = run.trajectory[i].grad_norm;
        if (gap > c_dom * g * g + 1e-9) dominated = false;
      }
      const double final_gap = (run.trajectory.back().J - J_star) / J_star;
      if (monotone && dominated && final_gap < 1e-4 && run.final_stability.stable) {
        note("n=%d: eta %.4g, %d iterates, relative gap %.2e, monotone, dominated", n, eta,
             int(run.trajectory.back().iteration), final_gap);
        instance_ok = true;
      }
    }
    if (!instance_ok) {
      note("n=%d: FAILED to certify optimality agreement", n);
      all_ok = false;
    }
  }
  return all_ok;
}

bool criterion6_monte_carlo_validation() {
  std::mt19937_64 gen(601);
  bool all_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + int(gen() % 4);
    const int m = 1 + int(gen() % 3);
    const auto sys = random_system(gen, n, m, 1, 1, 0.8);
    const auto cost = identity_cost(n, m);
    const Gain K = random_stabilizing_gain(gen, sys, cost);
    const CostEval eval = lqrm_cost(sys, cost, K);
    const auto mc = monte_carlo_simulate(sys, cost, K, 500, 10000, 6000 + trial);
    const double gap = std::abs(mc.cost_estimate - eval.J);
    const bool ok = !mc.diverged && gap <= 3.0 * mc.cost_stderr;
    if (!ok || trial < 3)
      note("instance %d: J %.6g, MC %.6g +- %.3g -> %s", trial, eval.J, mc.cost_estimate,
           mc.cost_stderr, ok ? "ok" : "FAIL");
    all_ok = all_ok && ok;
  }
  return all_ok;
}

bool criterion7_noise_awareness() {
  // scalar family: a=0.9, b=1, q=1, r=1e-3, one input noise with direction 1
  const Matrix A = scalar(0.9), B = scalar(1.0);
  const CostSpec cost(scalar(1.0), scalar(1e-3), scalar(1.0));
  MultiplicativeNoiseSystem noise_free(A, B);
  const Gain K_ignorant =
      optimal_gain(noise_free, cost, riccati_value_iteration(noise_free, cost).P);

  auto with_beta = [&](double beta) {
    return MultiplicativeNoiseSystem(A, B, {}, {{beta, scalar(1.0)}});
  };
  // calibrate: bisect the variance where the noise-ignorant gain crosses radius 1
  double lo = 0.0, hi = 8.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (is_mean_square_stable(with_beta(mid), K_ignorant).spectral_radius > 1.0)
      hi = mid;
    else
      lo = mid;
  }
  const double beta = 1.2 * hi;
  const auto sys = with_beta(beta);

  const StabilityReport open_loop = is_mean_square_stable(sys, Gain(scalar(0.0)));
  const StabilityReport ignorant = is_mean_square_stable(sys, K_ignorant);
  const Gain K_aware = optimal_gain(sys, cost, riccati_value_iteration(sys, cost).P);
  const StabilityReport aware = is_mean_square_stable(sys, K_aware);

  note("input-noise variance %.4f (calibrated crossing at %.4f)", beta, hi);
  note("open loop radius %.4f (stable: %s)", open_loop.spectral_radius,
       open_loop.stable ? "yes" : "no");
  note("noise-ignorant gain %.6f: radius %.4f -> %s", K_ignorant.K(0, 0),
       ignorant.spectral_radius, ignorant.stable ? "stable (FAIL)" : "mean-square unstable");
  note("noise-aware gain %.6f: radius %.4f -> %s", K_aware.K(0, 0), aware.spectral_radius,
       aware.stable ? "mean-square stable" : "unstable (FAIL)");
  return open_loop.stable && !ignorant.stable && aware.stable;
}

struct SweepOutcome {
  std::string label;
  bool ran = false;
  std::string error;
  std::vector<double> fractions;
  std::vector<double> costs;
  bool all_stable = true;
};

bool criterion8_benchmark_sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  NetworkSpec net;
  net.n_nodes = 21;
  net.p_er = er_connectivity_probability(21, 7.0);
  net.seed = 801;
  net.noise_level = NoiseLevel::low;
  const auto sys = build_benchmark(net);
  const int n = sys.state_dim(), m = sys.input_dim();
  const auto cost = identity_cost(n, m);
  const Gain K0 = optimal_gain(sys, cost, riccati_value_iteration(sys, cost).P);

  struct Job {
    RegularizerKind kind;
    double gamma0;
    OptimMethod method;
  };
  std::vector<Job> jobs;
  for (auto method : {OptimMethod::gradient, OptimMethod::subgradient, OptimMethod::proximal}) {
    jobs.push_back({RegularizerKind::L1, 10.0, method});
    jobs.push_back({RegularizerKind::GroupLassoRow, 100.0, method});
  }

  std::vector<SweepOutcome> outcomes(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    SweepOutcome& out = outcomes[j];
    out.label = to_string(job.kind) + "/" + to_string(job.method);
    try {
      RegularizerSpec reg;
      reg.kind = job.kind;
      reg.huber_phi = job.method == OptimMethod::gradient ? 1e-3 : 0.0;
      SweepConfig sweep;
      sweep.gamma0 = job.gamma0;
      sweep.eta0 = 1e-5;
      sweep.stages = 8;
      OptimizerConfig config;
      config.max_iterations = 30000;
      config.best_hold_iterations = 100;
      config.grad_norm_tol_coeff = 0.1;
      config.record_every = 10;
      const auto stages = gamma_sweep(sys, cost, reg, K0, job.method, sweep, config);
      const SparsityGranularity granularity = job.kind == RegularizerKind::L1
                                                  ? SparsityGranularity::entry
                                                  : SparsityGranularity::row;
      for (const auto& [gamma, result] : stages) {
        out.all_stable = out.all_stable && result.best_stability.stable &&
                         result.final_stability.stable;
        out.fractions.push_back(
            sparsity_pattern(result.best_gain.K, granularity).sparsity_fraction);
        out.costs.push_back(result.best_J);
      }
      out.ran = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  }

  bool all_ok = true;
  for (const auto& out : outcomes) {
    if (!out.ran) {
      note("%s: EXCEPTION %s", out.label.c_str(), out.error.c_str());
      all_ok = false;
      continue;
    }
    const double unit =
        out.label.rfind("l1/", 0) == 0 ? 1.0 / double(m * n) : 1.0 / double(m);
    bool fractions_ok = true, costs_ok = true;
    for (std::size_t s = 1; s < out.fractions.size(); ++s) {
      if (out.fractions[s] < out.fractions[s - 1] - unit - 1e-12) fractions_ok = false;
      if (out.costs[s] < out.costs[s - 1] * (1.0 - 0.01)) costs_ok = false;
    }
    note("%s: stable %s, fraction %.3f -> %.3f (%s), cost %.1f -> %.1f (%s)", out.label.c_str(),
         out.all_stable ? "yes" : "NO", out.fractions.front(), out.fractions.back(),
         fractions_ok ? "nondecreasing" : "NOT monotone", out.costs.front(), out.costs.back(),
         costs_ok ? "nondecreasing" : "NOT monotone");
    all_ok = all_ok && out.all_stable && fractions_ok && costs_ok;
  }

  // the three methods agree at the final stage: cost within 5%, sparsity
  // within one group / 5 points
  for (auto kind : {RegularizerKind::L1, RegularizerKind::GroupLassoRow}) {
    std::vector<double> final_cost, final_frac;
    for (std::size_t j = 0; j < jobs.size(); ++j)
      if (jobs[j].kind == kind && outcomes[j].ran) {
        final_cost.push_back(outcomes[j].costs.back());
        final_frac.push_back(outcomes[j].fractions.back());
      }
    if (final_cost.size() != 3) {
      all_ok = false;
      continue;
    }
    const double cost_lo = *std::min_element(final_cost.begin(), final_cost.end());
    const double cost_hi = *std::max_element(final_cost.begin(), final_cost.end());
    const double frac_lo = *std::min_element(final_frac.begin(), final_frac.end());
    const double frac_hi = *std::max_element(final_frac.begin(), final_frac.end());
    const bool agree =
        (cost_hi - cost_lo) <= 0.05 * cost_lo && (frac_hi - frac_lo) <= 0.05 + 1e-9;
    note("%s cross-method: cost %.1f..%.1f, fraction %.3f..%.3f -> %s", to_string(kind).c_str(),
         cost_lo, cost_hi, frac_lo, frac_hi, agree ? "agree" : "DISAGREE");
    all_ok = all_ok && agree;
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  note("runtime %.1fs (target < 600s)", seconds);
  return all_ok && seconds < 600.0;
}

bool criterion9_regularizer_algebra() {
  std::mt19937_64 gen(901);
  std::uniform_real_distribution<double> unif(0.05, 2.0);
  const std::vector<RegularizerKind> all = {
      RegularizerKind::L1,       RegularizerKind::RowMax,
      RegularizerKind::ColMax,   RegularizerKind::GroupLassoRow,
      RegularizerKind::GroupLassoCol, RegularizerKind::SparseGroupLassoRow,
      RegularizerKind::SparseGroupLassoCol};
  const std::vector<RegularizerKind> proxable = {
      RegularizerKind::L1, RegularizerKind::GroupLassoRow, RegularizerKind::GroupLassoCol,
      RegularizerKind::SparseGroupLassoRow, RegularizerKind::SparseGroupLassoCol};

  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    RegularizerSpec spec;
    spec.kind = proxable[trial % proxable.size()];
    const double tau = unif(gen);
    const Matrix u = random_matrix(gen, 3, 4), v = random_matrix(gen, 3, 4);
    if ((reg_prox(u, spec, tau) - reg_prox(v, spec, tau)).norm() > (u - v).norm() + 1e-12) {
      note("prox nonexpansiveness FAILED at trial %d", trial);
      return false;
    }
    ++checked;
  }
  for (int trial = 0; trial < 1000; ++trial) {
    RegularizerSpec spec;
    spec.kind = all[trial % all.size()];
    const Matrix K = random_matrix(gen, 3, 4), Kp = random_matrix(gen, 3, 4);
    const Matrix g = reg_subgradient(K, spec);
    if (reg_value(Kp, spec) <
        reg_value(K, spec) + (g.array() * (Kp - K).array()).sum() - 1e-10) {
      note("subgradient inequality FAILED at trial %d", trial);
      return false;
    }
    ++checked;
  }
  for (int trial = 0; trial < 1000; ++trial) {
    RegularizerSpec exact, huber;
    exact.kind = huber.kind = all[trial % all.size()];
    huber.huber_phi = unif(gen) * 0.3;
    const Matrix K = random_matrix(gen, 3, 4);
    int groups = 0;
    switch (exact.kind) {
      case RegularizerKind::L1: groups = 12; break;
      case RegularizerKind::RowMax:
      case RegularizerKind::GroupLassoRow: groups = 3; break;
      case RegularizerKind::ColMax:
      case RegularizerKind::GroupLassoCol: groups = 4; break;
      case RegularizerKind::SparseGroupLassoRow: groups = 15; break;
      case RegularizerKind::SparseGroupLassoCol: groups = 16; break;
    }
    if (std::abs(reg_value(K, exact) - reg_value(K, huber)) >
        0.5 * huber.huber_phi * groups + 1e-12) {
      note("huber convergence bound FAILED at trial %d", trial);
      return false;
    }
    ++checked;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double x = normal(gen);
    const double phi = 0.05 + std::abs(normal(gen));
    RegularizerSpec l1;
    l1.kind = RegularizerKind::L1;
    const Matrix K = scalar(x);
    if (reg_subgradient(K, l1)(0, 0) != (x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0))) return false;
    RegularizerSpec l1h = l1;
    l1h.huber_phi = phi;
    if (std::abs(huber_gradient(K, l1h)(0, 0) - x / std::max(std::abs(x), phi)) > 1e-14)
      return false;
    Matrix row = random_matrix(gen, 1, 3);
    RegularizerSpec gl;
    gl.kind = RegularizerKind::GroupLassoRow;
    const Matrix gr = reg_subgradient(row, gl);
    if ((gr - row / row.norm()).cwiseAbs().maxCoeff() > 1e-12) return false;
    checked += 3;
  }
  note("%d randomized checks passed", checked);
  return true;
}

}  // namespace

int main() {
  std::printf("acceptance suite (threads: %d)\n", omp_get_max_threads());
  criterion(1, "hard-thresholding counterexample", criterion1_hard_threshold);
  criterion(2, "two-local-minima counterexample", criterion2_local_minima);
  criterion(3, "gradient correctness", criterion3_gradient_correctness);
  criterion(4, "solver consistency", criterion4_solver_consistency);
  criterion(5, "optimality agreement at gamma = 0", criterion5_optimality_agreement);
  criterion(6, "monte carlo validation", criterion6_monte_carlo_validation);
  criterion(7, "noise-aware vs noise-ignorant stability", criterion7_noise_awareness);
  criterion(8, "benchmark sweep at desk scale", criterion8_benchmark_sweep);
  criterion(9, "regularizer algebra", criterion9_regularizer_algebra);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
