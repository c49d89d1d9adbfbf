#include "strategio/harness.hpp"

#include "strategio/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

namespace strategio {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags for the independent draws of one experiment.
enum : std::uint64_t { kWorldStream = 1, kTrainNoise, kTrainAssign, kTestNoise, kRepetition };

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) { return Rng::stream(seed, tag).next_u64(); }

Matrix gaussian_matrix(Rng& rng, int rows, int cols, double scale) {
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = scale * rng.normal();
  return M;
}

// Rescales unit factors so that every expected outcome is at most `cap` in magnitude.
// Shrinks each unit whose expected outcomes exceed `cap` in magnitude, so a
// unit's factor does not depend on the rest of the population.
void cap_outcomes(const LatentFactorSpec& spec, UnitFactors& V, double cap) {
  for (Eigen::Index i = 0; i < V.rows(); ++i) {
    double peak = 0.0;
    for (const auto& U : spec.factors) peak = std::max(peak, (U * V.row(i).transpose()).cwiseAbs().maxCoeff());
    if (peak > cap) V.row(i) *= cap / peak;
  }
}

void gaussian_world(const ExperimentConfig& c, Rng& rng, World& w) {
  w.spec.factors.clear();
  const Matrix base = gaussian_matrix(rng, c.T, c.s, 1.0);
  for (int d = 0; d < c.k; ++d) {
    Matrix U = d == 0 ? base : gaussian_matrix(rng, c.T, c.s, 1.0);
    U.topRows(c.T0) = base.topRows(c.T0);
    w.spec.factors.push_back(std::move(U));
  }
  const int m = c.m_train + c.m_test;
  UnitFactors V = gaussian_matrix(rng, m, c.s, 1.0 / std::sqrt(static_cast<double>(c.s)));
  cap_outcomes(w.spec, V, 0.9);
  w.train_units = V.topRows(c.m_train);
  w.test_units = V.bottomRows(c.m_test);
  w.train_noise_scale = Vector::Ones(c.m_train);
  w.test_noise_scale = Vector::Ones(c.m_test);
}

// Retail-like panel: a level, a seasonal cycle and a promotion
// responsiveness per unit; intervention 1 adds a lift whose sign depends on
// the unit. Training noise is heteroscedastic across units; test
// trajectories are taken as ground truth, so they carry no noise.
void semi_synthetic_world(const ExperimentConfig& c, Rng& rng, World& w) {
  require(c.k == 2 && c.s == 3, ErrorCode::InvalidArgument, "the semi-synthetic generator needs k = 2 and s = 3");
  const double two_pi = 2.0 * std::numbers::pi;
  Matrix control(c.T, 3), treated(c.T, 3);
  for (int t = 0; t < c.T; ++t) {
    const double phase = two_pi * (t + 1) / 6.0;
    control.row(t) << 1.0, std::sin(phase), 0.6 * std::cos(phase) + 0.4;
    treated.row(t) = control.row(t);
    if (t >= c.T0) treated.row(t) += Eigen::RowVector3d(-0.5, 0.1, 1.0) * (1.0 + 0.1 * rng.normal());
  }
  w.spec.factors = {control, treated};

  const int m = c.m_train + c.m_test;
  UnitFactors V(m, 3);
  Vector scale(m);
  for (int i = 0; i < m; ++i) {
    V(i, 0) = rng.uniform(0.2, 0.6);
    V(i, 1) = 0.2 * rng.normal();
    V(i, 2) = 0.5 * V(i, 0) + 0.25 * rng.normal();
    scale(i) = rng.uniform(0.5, 1.5);
  }
  cap_outcomes(w.spec, V, 0.9);
  w.train_units = V.topRows(c.m_train);
  w.test_units = V.bottomRows(c.m_test);
  w.train_noise_scale = scale.head(c.m_train);
  w.test_noise_scale = Vector::Zero(c.m_test);
}

Vector estimated_rewards(const InterventionPolicy& policy, const Vector& y) {
  auto from = [&](const BetaSet& b) {
    Vector r(b.k());
    for (int d = 0; d < b.k(); ++d) r(d) = b[d].dot(y);
    return r;
  };
  if (auto p = std::get_if<ShiftedTwo>(&policy)) return from(BetaSet({p->beta0, p->beta1}));
  if (auto p = std::get_if<ShiftedMulti>(&policy)) return from(p->betas);
  if (auto p = std::get_if<Naive>(&policy)) return from(p->betas);
  if (auto p = std::get_if<MinIndexMembership>(&policy)) return p->betas ? from(*p->betas) : Vector();
  return si_predicted_rewards(std::get<SyntheticInterventions>(policy), y);
}

Intervention argmax_high(const Vector& r) {
  Intervention best = 0;
  for (Eigen::Index d = 1; d < r.size(); ++d)
    if (r(d) >= r(best)) best = static_cast<Intervention>(d);
  return best;
}

}  // namespace

std::string to_string(PolicyVariant v) {
  switch (v) {
    case PolicyVariant::ShiftedTwo: return "shifted-two";
    case PolicyVariant::ShiftedMulti: return "shifted-multi";
    case PolicyVariant::MinIndex: return "min-index";
    case PolicyVariant::Naive: return "naive";
    case PolicyVariant::SyntheticInterventions: return "si";
  }
  return "unknown";
}

PolicyVariant parse_variant(const std::string& name) {
  for (auto v : {PolicyVariant::ShiftedTwo, PolicyVariant::ShiftedMulti, PolicyVariant::MinIndex,
                 PolicyVariant::Naive, PolicyVariant::SyntheticInterventions})
    if (to_string(v) == name) return v;
  fail(ErrorCode::InvalidArgument,
       "unknown policy variant '" + name + "' (expected shifted-two|shifted-multi|min-index|naive|si)");
}

void ExperimentConfig::validate() const {
  require(s >= 1 && T0 >= s && T > T0, ErrorCode::InvalidArgument, "need 1 <= s <= T0 < T");
  require(k >= 2, ErrorCode::InvalidArgument, "need k >= 2");
  require(sigma >= 0.0, ErrorCode::InvalidArgument, "sigma must be >= 0");
  require(m_train >= k, ErrorCode::InvalidArgument, "m_train must be >= k");
  require(m_test >= 0, ErrorCode::InvalidArgument, "m_test must be >= 0");
  require(delta_true > 0.0, ErrorCode::InvalidArgument, "delta_true must be > 0");
  require(delta_hat >= 0.0, ErrorCode::InvalidArgument, "delta_hat must be >= 0");
  require(omega.size() == 0 || omega.size() == T - T0, ErrorCode::DimensionMismatch, "omega must have length T - T0");
  require(repetitions >= 1, ErrorCode::InvalidArgument, "repetitions must be >= 1");
  require(generator == "gaussian" || generator == "semi-synthetic", ErrorCode::InvalidArgument,
          "generator must be gaussian or semi-synthetic");
  require(variant != PolicyVariant::ShiftedTwo || k == 2, ErrorCode::InvalidArgument,
          "shifted-two needs k = 2");
}

RewardWeights ExperimentConfig::weights() const { return omega.size() ? omega : Vector::Ones(T - T0); }

World make_world(const ExperimentConfig& config) {
  config.validate();
  World w;
  w.spec.s = config.s;
  w.spec.T0 = config.T0;
  w.spec.T = config.T;
  w.spec.k = config.k;
  w.spec.sigma = config.sigma;
  w.omega = config.weights();
  Rng rng(derive(config.seed, kWorldStream));
  if (config.generator == "semi-synthetic")
    semi_synthetic_world(config, rng, w);
  else
    gaussian_world(config, rng, w);
  w.spec.validate();
  std::vector<Matrix> post;
  for (int d = 0; d < config.k; ++d) post.push_back(w.spec.post_factors(d));
  w.betas = reformulate_beta(w.spec.pre_factors(), post, w.omega);
  return w;
}

InterventionPolicy learn_variant(PolicyVariant variant, const PanelDataset& train, const RewardWeights& omega,
                                 double delta, const PCRConfig& pcr, std::optional<LearnedBetas>* learned) {
  auto keep = [&](const LearnedBetas& b) {
    if (learned) *learned = b;
  };
  switch (variant) {
    case PolicyVariant::ShiftedTwo: {
      auto out = learn_two(train, omega, delta, pcr);
      keep(out.learned);
      return out.policy;
    }
    case PolicyVariant::ShiftedMulti: {
      auto out = learn_multi(train, omega, delta, pcr);
      keep(out.learned);
      return out.policy;
    }
    case PolicyVariant::Naive: {
      auto out = learn_betas(train, omega, pcr);
      keep(out);
      return Naive{out.beta_hats};
    }
    case PolicyVariant::MinIndex: {
      require(delta > 0.0, ErrorCode::InvalidArgument, "min-index policy needs delta > 0");
      auto out = learn_betas(train, omega, pcr);
      keep(out);
      MinIndexMembership p;
      p.delta = delta;
      p.betas = out.beta_hats;
      return p;
    }
    case PolicyVariant::SyntheticInterventions:
      require(pcr.p > 0, ErrorCode::InvalidArgument, "synthetic interventions needs an explicit rank");
      return make_synthetic_interventions(train, omega, pcr.p);
  }
  fail(ErrorCode::InvalidArgument, "unknown policy variant");
}

InterventionPolicy learn_policy(const ExperimentConfig& config, const PanelDataset& train,
                                std::optional<LearnedBetas>* learned) {
  PCRConfig pcr = config.pcr;
  if (pcr.p <= 0) pcr.p = config.s;
  return learn_variant(config.variant, train, config.weights(), config.delta_hat, pcr, learned);
}

PanelDataset generate_training(const ExperimentConfig& config, const World& world,
                               std::vector<std::string>* warnings) {
  GenerationOptions options;
  options.bound_check = config.bound_check;
  options.unit_noise_scale = world.train_noise_scale;
  const auto panel =
      generate_counterfactuals(world.spec, world.train_units, derive(config.seed, kTrainNoise), options);
  if (warnings) warnings->insert(warnings->end(), panel.warnings.begin(), panel.warnings.end());
  return observe(panel, rct_assign(config.m_train, config.k, derive(config.seed, kTrainAssign)));
}

double normalized_delta_revenue(const std::vector<Intervention>& assigned, const Matrix& rewards,
                                const std::vector<Intervention>& optimal) {
  require(rewards.cols() == 2, ErrorCode::InvalidArgument, "normalized delta revenue is defined for k = 2");
  require(assigned.size() == static_cast<std::size_t>(rewards.rows()) && optimal.size() == assigned.size(),
          ErrorCode::DimensionMismatch, "assignment and reward rows differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    require(assigned[i] == 0 || assigned[i] == 1, ErrorCode::InvalidArgument, "assignment outside {0, 1}");
    require(optimal[i] == 0 || optimal[i] == 1, ErrorCode::InvalidArgument, "optimal assignment outside {0, 1}");
    num += rewards(row, assigned[i]) - rewards(row, 1 - assigned[i]);
    den += rewards(row, optimal[i]) - rewards(row, 1 - optimal[i]);
  }
  require(den != 0.0, ErrorCode::Degenerate, "zero denominator: every unit is indifferent");
  return num / den;
}

Metrics evaluate_policy(const ExperimentConfig& config, const World& world, const InterventionPolicy& policy) {
  Metrics m;
  const int n = static_cast<int>(world.test_units.rows());
  m.units = n;
  m.normalized_delta_revenue = kNaN;
  if (n == 0) return m;

  GenerationOptions options;
  options.bound_check = config.bound_check;
  options.unit_noise_scale = world.test_noise_scale;
  const auto panel = generate_counterfactuals(world.spec, world.test_units, derive(config.seed, kTestNoise), options);
  m.warnings = panel.warnings;
  const Matrix expected_pre = panel.expected_pre();
  const Matrix observed_pre = panel.noisy_pre();

  const bool shifted = std::holds_alternative<ShiftedTwo>(policy) || std::holds_alternative<ShiftedMulti>(policy);
  m.equivalence_checked = world.spec.k == 2 && shifted && config.delta_hat == config.delta_true;

  std::vector<Intervention> assigned, optimal;
  Matrix rewards(n, world.spec.k);
  double sq = 0.0, sum = 0.0;
  int wrong = 0;
  for (int i = 0; i < n; ++i) {
    const Vector y_exp = expected_pre.row(i).transpose();
    const Vector y_obs = observed_pre.row(i).transpose();
    const auto type = unit_type(y_exp, world.betas);

    UnitRecord rec;
    rec.unit = i;
    rec.type = type.type;
    rec.truthful = assign(policy, y_obs);
    const auto br = best_response(policy, y_obs, config.delta_true);
    rec.assigned = br.achieved;
    rec.moved = br.moved;
    rec.effort = br.effort;

    Vector sorted = type.rewards;
    std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
    rec.boundary = sorted(0) - sorted(1) < 1e-6;

    const Vector estimate = estimated_rewards(policy, y_obs);
    if (estimate.size() == type.rewards.size()) {
      const auto check = regret_decomposition(rec.assigned, rec.type, estimate, type.rewards);
      rec.regret = check.regret;
      rec.bound = check.bound;
      rec.bound_holds = check.holds;
      if (!check.holds) ++m.bound_violations;
      if (m.equivalence_checked && argmax_high(estimate) != rec.assigned) ++m.equivalence_mismatches;
    } else {
      rec.regret = type.rewards(rec.type) - type.rewards(rec.assigned);
      rec.bound = std::numeric_limits<double>::infinity();
    }
    sq += rec.regret * rec.regret;
    sum += rec.regret;
    if (!rec.boundary) {
      ++m.evaluated_units;
      if (rec.assigned != rec.type) ++wrong;
    }
    rewards.row(i) = type.rewards.transpose();
    assigned.push_back(rec.assigned);
    optimal.push_back(rec.type);
    m.records.push_back(rec);
  }
  m.mean_squared_regret = sq / n;
  m.mean_regret = sum / n;
  m.misassignment_rate = m.evaluated_units ? static_cast<double>(wrong) / m.evaluated_units : 0.0;
  if (world.spec.k == 2) {
    try {
      m.normalized_delta_revenue = normalized_delta_revenue(assigned, rewards, optimal);
    } catch (const Error& e) {
      m.warnings.push_back(e.what());
    }
  }
  if (m.bound_violations)
    m.warnings.push_back(std::to_string(m.bound_violations) + " units exceed the regret bound");
  if (m.equivalence_mismatches)
    m.warnings.push_back(std::to_string(m.equivalence_mismatches) + " strategic assignments differ from the naive rule");
  return m;
}

ExperimentRun run_experiment_detailed(const ExperimentConfig& config) {
  ExperimentRun run;
  run.world = make_world(config);
  std::vector<std::string> warnings;
  run.train = generate_training(config, run.world, &warnings);
  run.policy = learn_policy(config, run.train, &run.learned);
  run.metrics = evaluate_policy(config, run.world, run.policy);
  run.metrics.warnings.insert(run.metrics.warnings.begin(), warnings.begin(), warnings.end());
  if (run.learned)
    run.metrics.warnings.insert(run.metrics.warnings.end(), run.learned->warnings.begin(), run.learned->warnings.end());
  return run;
}

Metrics run_experiment(const ExperimentConfig& config) { return run_experiment_detailed(config).metrics; }

std::vector<SweepRow> delta_sweep(const ExperimentConfig& config, const std::vector<double>& ratios, int jobs) {
  config.validate();
  for (double r : ratios) require(r >= 0.0 && std::isfinite(r), ErrorCode::InvalidArgument, "ratios must be >= 0");
  const int reps = config.repetitions;
  const std::size_t tasks = ratios.size() * static_cast<std::size_t>(reps);
  std::vector<Metrics> results(tasks);
  std::vector<std::exception_ptr> errors(tasks);

  auto run_task = [&](std::size_t task) {
    const std::size_t r = task / static_cast<std::size_t>(reps);
    const int rep = static_cast<int>(task % static_cast<std::size_t>(reps));
    ExperimentConfig c = config;
    c.delta_hat = ratios[r] * config.delta_true;
    c.seed = derive(config.seed, kRepetition + static_cast<std::uint64_t>(rep));
    try {
      results[task] = run_experiment(c);
    } catch (...) {
      errors[task] = std::current_exception();
    }
  };

  int workers = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(tasks, 1)));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t t; (t = next.fetch_add(1)) < tasks;) run_task(t);
    });
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<SweepRow> rows;
  for (std::size_t r = 0; r < ratios.size(); ++r) {
    SweepRow row;
    row.ratio = ratios[r];
    double regret = 0.0, mis = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto& m = results[r * static_cast<std::size_t>(reps) + static_cast<std::size_t>(rep)];
      if (!std::isnan(m.normalized_delta_revenue)) row.ndr_values.push_back(m.normalized_delta_revenue);
      regret += m.mean_regret;
      mis += m.misassignment_rate;
    }
    row.mean_regret = regret / reps;
    row.misassignment = mis / reps;
    const auto count = row.ndr_values.size();
    if (count == 0) {
      row.mean_ndr = row.std_ndr = kNaN;
    } else {
      double total = 0.0;
      for (double v : row.ndr_values) total += v;
      row.mean_ndr = total / static_cast<double>(count);
      double ss = 0.0;
      for (double v : row.ndr_values) ss += (v - row.mean_ndr) * (v - row.mean_ndr);
      row.std_ndr = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "ratio,mean_ndr,std_ndr,mean_regret,misassignment\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.ratio, r.mean_ndr, r.std_ndr, r.mean_regret,
                  r.misassignment);
    out += buf;
  }
  return out;
}

}  // namespace strategio
