// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "strategio/estimation.hpp"
#include "strategio/harness.hpp"
#include "strategio/policies.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace strategio;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <class... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Matrix expected_pre(const testing::World& w) { return w.V * w.spec.pre_factors().transpose(); }

// 1. Shifted two-arm policy with true betas sends every non-tied unit to its type.
Outcome strategyproofness() {
  Rng rng(101);
  long long units = 0, correct = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int s = 1 + static_cast<int>(rng.below(5));
    const int T0 = s + static_cast<int>(rng.below(static_cast<std::uint64_t>(11 - s)));
    const int T = T0 + 1 + static_cast<int>(rng.below(3));
    const auto w = testing::random_world(rng, s, T0, T, 2, 50);
    const auto betas = testing::true_betas(w.spec, Vector::Ones(T - T0));
    const double delta = rng.uniform(0.01, 0.5);
    const InterventionPolicy policy = ShiftedTwo{betas[0], betas[1], delta};
    const Matrix Y = expected_pre(w);
    for (int i = 0; i < 50; ++i) {
      const Vector y = Y.row(i).transpose();
      const auto type = unit_type(y, betas);
      if (std::abs(type.rewards(1) - type.rewards(0)) <= 1e-6) continue;
      ++units;
      correct += best_response(policy, y, delta).achieved == type.type;
    }
  }
  return {units > 0 && correct == units, format("%lld/%lld non-tied units achieve their type", correct, units)};
}

// 2. Cone projections against a brute-force grid.
Outcome qp_oracle() {
  Rng rng(202);
  double worst_gap = 0.0, worst_kkt = 0.0;
  bool ok = true;
  for (int rep = 0; rep < 100; ++rep) {
    Region cone;
    const int m = 1 + static_cast<int>(rng.below(3));
    for (int j = 0; j < m; ++j) cone.halfspaces.push_back({testing::random_vector(rng, 2), 0.0, false});
    Vector y(2);
    y << rng.uniform(-1, 1), rng.uniform(-1, 1);
    const auto p = project_onto_region(y, cone);
    // The apex is feasible, so the projection lies within |y| of y.
    const double oracle = testing::grid_distance_2d(y, cone, y.norm() + 1e-3, 1e-3);
    worst_gap = std::max(worst_gap, std::abs(p.distance - oracle));
    worst_kkt = std::max(worst_kkt, p.kkt_residual);
    ok = ok && p.feasible;
  }
  ok = ok && worst_gap <= 2e-3 && worst_kkt <= 1e-9;
  return {ok, format("max |qp - grid| = %.2e (tol 2e-3), max KKT residual = %.2e (tol 1e-9)", worst_gap, worst_kkt)};
}

// 3. Three-arm impossibility instance.
Outcome impossibility() {
  const auto r = demo_impossible(0.01, 0.01, 1.0);
  const double closed_form = std::sqrt(1.25) - 0.5;
  const bool ok = r.lhs < r.rhs && std::abs(r.rhs - closed_form) < 1e-12 && r.verdict == "VIOLATED-SoT" &&
                  !r.finite_satisfied && r.top_finite.verdict == UnitVerdict::Violated &&
                  r.top_finite.certificate == "grid" && !r.continuum_satisfied && r.top_blocked &&
                  r.top_achieved != 2 && r.lower_blocked;
  return {ok, format("lhs %.4f < rhs %.6f; finite SoT %s (%s certificate); top unit effort to arm 2 %.4f > delta; "
                     "%d of %d sampled lower units reach arm 2",
                     r.lhs, r.rhs, r.finite_satisfied ? "SATISFIED" : "VIOLATED", r.top_finite.certificate.c_str(),
                     r.top_distance_to_region, r.lower_reaching_top, r.sampled_type0 + r.sampled_type1)};
}

// 4. Noiseless rank-s panels: learned betas reproduce every unit's rewards.
Outcome pcr_recovery() {
  Rng rng(404);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int s = 1 + static_cast<int>(rng.below(4));
    const int T0 = s + static_cast<int>(rng.below(5));
    const int T = T0 + 1 + static_cast<int>(rng.below(4));
    const int k = 2 + static_cast<int>(rng.below(2));
    const int m = k * (s + 5) + static_cast<int>(rng.below(60));
    const auto w = testing::random_world(rng, s, T0, T, k, m + 50);
    const Vector omega = testing::random_vector(rng, T - T0).cwiseAbs();
    testing::World train = w;
    train.V = w.V.topRows(m);
    const auto panel = generate_counterfactuals(train.spec, train.V, static_cast<std::uint64_t>(rep));
    const auto data = observe(panel, rct_assign(m, k, static_cast<std::uint64_t>(rep)));
    PCRConfig pcr;
    pcr.p = s;
    const auto learned = learn_betas(data, omega, pcr);
    const Matrix Y = expected_pre(w);
    for (int i = 0; i < Y.rows(); ++i)
      for (int d = 0; d < k; ++d) {
        const double r = omega.dot(w.spec.post_factors(d) * w.V.row(i).transpose());
        worst = std::max(worst, std::abs(learned.beta_hats[d].dot(Y.row(i).transpose()) - r));
      }
  }
  return {worst <= 1e-8, format("max |r_hat - r| = %.2e over training and held-out units (tol 1e-8)", worst)};
}

struct NoisyRuns {
  long long units = 0, bound_ok = 0, equivalence_units = 0, equivalence_ok = 0;
  int runs = 0, unchecked_runs = 0;
};

NoisyRuns noisy_runs() {
  NoisyRuns out;
  for (double sigma : {0.01, 0.1})
    for (int n : {50, 200})
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        ExperimentConfig c;
        c.sigma = sigma;
        c.m_train = 2 * n;
        c.m_test = 100;
        c.seed = 1000 + seed;
        const auto run = run_experiment_detailed(c);
        ++out.runs;
        if (!run.metrics.equivalence_checked || run.metrics.equivalence_mismatches != 0) ++out.unchecked_runs;
        for (const auto& r : run.metrics.records) {
          ++out.units;
          out.bound_ok += r.bound_holds;
        }
        // Independent draw of test reports: strategic assignment under the
        // learned shifted policy against the naive argmax of the same betas.
        const InterventionPolicy naive = Naive{run.learned->beta_hats};
        GenerationOptions options;
        options.bound_check = BoundCheck::Off;
        options.unit_noise_scale = run.world.test_noise_scale;
        const Matrix observed =
            generate_counterfactuals(run.world.spec, run.world.test_units, 77 + seed, options).noisy_pre();
        for (int i = 0; i < observed.rows(); ++i) {
          const Vector y = observed.row(i).transpose();
          ++out.equivalence_units;
          out.equivalence_ok += best_response(run.policy, y, c.delta_true).achieved == assign(naive, y);
        }
      }
  return out;
}

// 5 and 6 share the same runs.
const NoisyRuns& shared_runs() {
  static const NoisyRuns runs = noisy_runs();
  return runs;
}

Outcome regret_bound() {
  const auto& r = shared_runs();
  return {r.units > 0 && r.bound_ok == r.units,
          format("%lld/%lld test units within the bound over %d runs", r.bound_ok, r.units, r.runs)};
}

Outcome equivalence() {
  const auto& r = shared_runs();
  return {r.equivalence_units > 0 && r.equivalence_ok == r.equivalence_units && r.unchecked_runs == 0,
          format("%lld/%lld strategic assignments equal naive assignments on unmodified reports; %d runs with "
                 "harness mismatches",
                 r.equivalence_ok, r.equivalence_units, r.unchecked_runs)};
}

// 7. Synthetic interventions under strategic units.
Outcome si_failure() {
  double si_min = 1.0, alg_max = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SiFailureConfig c;
    c.sigma = 0.02;
    c.m_test = 500;
    c.seed = seed;
    const auto r = demo_si_failure(c);
    si_min = std::min(si_min, r.si_misassignment);
    alg_max = std::max(alg_max, r.alg1_misassignment);
  }
  return {si_min >= 0.25 && alg_max <= 0.02,
          format("min SI misassignment %.3f (>= 0.25), max shifted-policy misassignment %.3f (<= 0.02)", si_min,
                 alg_max)};
}

// 8. Effort-budget misspecification on the semi-synthetic generator.
Outcome delta_sweep_trend() {
  ExperimentConfig c;
  c.generator = "semi-synthetic";
  c.repetitions = 10;
  c.seed = 1;
  const std::vector<double> ratios{0, 0.2, 0.5, 1, 2, 5};
  const auto rows = delta_sweep(c, ratios);
  auto ndr = [&](double ratio) {
    for (const auto& r : rows)
      if (r.ratio == ratio) return r.mean_ndr;
    return std::nan("");
  };
  const bool ok = ndr(0) < ndr(0.5) && ndr(0.5) < ndr(1) && ndr(1) > ndr(5) && ndr(1) >= 0.9;
  std::string detail = "mean ndr by ratio:";
  for (const auto& r : rows) detail += format(" %.1f->%.3f", r.ratio, r.mean_ndr);
  return {ok, detail};
}

// 9. Units separated by more than the gap threshold report truthfully.
Outcome gap_truthfulness() {
  const int T0 = 3, T = 5, k = 3;
  const double sigma = 0.005, delta = 0.1, alpha = 0.05;
  long long units = 0, truthful = 0, qualifying = 0;
  for (std::uint64_t inst = 0; inst < 4; ++inst) {
    Rng rng(900 + inst);
    // Identity pre-period factors: a unit's expected report is its latent factor.
    std::vector<int> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(inst));
    LatentFactorSpec spec;
    spec.s = T0;
    spec.T0 = T0;
    spec.T = T;
    spec.k = k;
    spec.sigma = sigma;
    for (int d = 0; d < k; ++d) {
      Vector beta = testing::random_vector(rng, T0, 0.05);
      beta(perm[d]) += 0.8;
      Matrix U(T, T0);
      U.topRows(T0).setIdentity();
      for (int t = T0; t < T; ++t) U.row(t) = beta.transpose() / (T - T0);
      spec.factors.push_back(U);
    }
    const auto betas = testing::true_betas(spec, Vector::Ones(T - T0));

    const int m_train = 600;
    UnitFactors train(m_train, T0);
    for (int i = 0; i < m_train; ++i)
      for (int j = 0; j < T0; ++j) train(i, j) = rng.uniform(-0.9, 0.9);
    const auto panel = generate_counterfactuals(spec, train, 10 + inst);
    const auto data = observe(panel, rct_assign(m_train, k, 20 + inst));
    PCRConfig pcr;
    pcr.p = T0;
    const auto learned = learn_multi(data, Vector::Ones(T - T0), delta, pcr);
    double beta_bar = 0.0;
    for (int d = 0; d < k; ++d)
      beta_bar = std::max({beta_bar, betas[d].cwiseAbs().maxCoeff(), learned.learned.beta_hats[d].cwiseAbs().maxCoeff()});
    const auto gap = gap_threshold(betas, learned.learned.beta_hats, delta, sigma, beta_bar, alpha);

    UnitFactors test(50, T0);
    for (int i = 0; i < 50; ++i) {
      const int d = static_cast<int>(rng.below(k));
      for (int j = 0; j < T0; ++j) test(i, j) = rng.uniform(-0.05, 0.05);
      test(i, perm[d]) += 0.85;
    }
    const auto test_panel = generate_counterfactuals(spec, test, 30 + inst);
    const InterventionPolicy policy = learned.policy;
    for (int i = 0; i < 50; ++i) {
      const Vector ey = test_panel.expected_pre().row(i).transpose();
      const auto type = unit_type(ey, betas);
      bool separated = true;
      for (int other = 0; other < k; ++other)
        if (other != type.type && type.rewards(type.type) - type.rewards(other) <= gap.gamma(type.type, other))
          separated = false;
      ++units;
      qualifying += separated;
      const auto br = best_response(policy, test_panel.noisy_pre().row(i).transpose(), delta);
      truthful += !br.moved && br.achieved == type.type;
    }
  }
  return {units == 200 && qualifying == units && truthful == units,
          format("%lld/%lld units exceed every gap threshold; %lld/%lld stay put and receive their type", qualifying,
                 units, truthful, units)};
}

// 10. One-dimensional discontinuity without a reward gap.
Outcome gap_necessity() {
  const auto r = demo_gap_necessity(0.0, 1.5, 1.0, 0.01, 1.0, {10, 50, 99, 101, 200});
  bool ok = r.matches_case_analysis && r.rows.size() == 5;
  std::string detail = "flips:";
  for (const auto& row : r.rows) {
    ok = ok && row.flips == (row.n < 100);
    detail += format(" n=%d:%s", row.n, row.flips ? "yes" : "no");
  }
  return {ok, detail};
}

// 11. Estimation error shrinks with the training size.
Outcome consistency() {
  const std::vector<int> sizes{50, 100, 200, 400};
  std::vector<double> medians;
  for (int n : sizes) {
    std::vector<double> errors;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ExperimentConfig c;
      c.sigma = 0.1;
      c.m_train = 2 * n;
      c.m_test = 0;
      c.seed = 5000 + seed;
      const auto world = make_world(c);
      const auto train = generate_training(c, world);
      PCRConfig pcr;
      pcr.p = c.s;
      const auto learned = learn_betas(train, world.omega, pcr);
      const Matrix pre = world.spec.pre_factors();
      double err = 0.0;
      for (int d = 0; d < c.k; ++d) {
        const Vector target = testing::project_onto_columns(pre, world.betas[d]);
        err += (learned.beta_hats[d] - target).norm();
      }
      errors.push_back(err);
    }
    medians.push_back(median(errors));
  }
  bool ok = true;
  std::string detail = "median error:";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    detail += format(" n=%d:%.4f", sizes[i], medians[i]);
    if (i > 0 && medians[i] > medians[i - 1]) ok = false;
  }
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "strategyproofness of the shifted two-arm policy", 30, strategyproofness},
      {2, "projection against grid oracle", 10, qp_oracle},
      {3, "three-arm impossibility", 20, impossibility},
      {4, "PCR exact recovery", 0, pcr_recovery},
      {5, "regret bound", 0, regret_bound},
      {6, "strategic/naive equivalence", 0, equivalence},
      {7, "synthetic interventions failure", 0, si_failure},
      {8, "delta sweep trend", 120, delta_sweep_trend},
      {9, "truthfulness under the reward gap", 0, gap_truthfulness},
      {10, "gap necessity", 0, gap_necessity},
      {11, "consistency", 0, consistency},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail += format("; exceeded %.0f s", c.limit_seconds);
    }
    failures += !o.pass;
    std::printf("%s [%2d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
