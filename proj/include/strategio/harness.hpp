#pragma once

#include "strategio/estimation.hpp"
#include "strategio/geometry.hpp"
#include "strategio/panel_model.hpp"
#include "strategio/policies.hpp"
#include "strategio/rewards.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace strategio {

enum class PolicyVariant { ShiftedTwo, ShiftedMulti, MinIndex, Naive, SyntheticInterventions };

std::string to_string(PolicyVariant v);
/// Accepts shifted-two | shifted-multi | min-index | naive | si.
PolicyVariant parse_variant(const std::string& name);

struct ExperimentConfig {
  int s = 3;
  int T0 = 5;
  int T = 8;
  int k = 2;
  double sigma = 0.05;
  int m_train = 135;
  int m_test = 135;
  double delta_true = 0.1;
  double delta_hat = 0.1;
  /// Empty = all ones.
  Vector omega;
  /// p <= 0 uses s.
  PCRConfig pcr;
  std::uint64_t seed = 0;
  PolicyVariant variant = PolicyVariant::ShiftedTwo;
  /// "gaussian" or "semi-synthetic".
  std::string generator = "gaussian";
  /// Seeds per ratio in a sweep.
  int repetitions = 10;
  BoundCheck bound_check = BoundCheck::Warn;

  void validate() const;
  RewardWeights weights() const;
};

/// Ground truth shared by the training and test populations.
struct World {
  LatentFactorSpec spec;
  RewardWeights omega;
  BetaSet betas;
  UnitFactors train_units;
  UnitFactors test_units;
  Vector train_noise_scale;
  Vector test_noise_scale;
};

World make_world(const ExperimentConfig& config);

struct UnitRecord {
  int unit = 0;
  Intervention type = 0;
  Intervention assigned = 0;
  /// Assignment of the unmodified report.
  Intervention truthful = 0;
  bool moved = false;
  double effort = 0.0;
  double regret = 0.0;
  double bound = 0.0;
  bool bound_holds = true;
  /// Reward gap between the best and second-best intervention < 1e-6.
  bool boundary = false;
};

struct Metrics {
  /// NaN when undefined (k != 2, no units, or zero denominator).
  double normalized_delta_revenue = 0.0;
  double mean_squared_regret = 0.0;
  double mean_regret = 0.0;
  /// Over non-boundary units.
  double misassignment_rate = 0.0;
  int units = 0;
  int evaluated_units = 0;
  /// Strategic assignment vs naive argmax of the learned betas on the
  /// unmodified report; checked on k = 2 shifted policies with delta_hat == delta_true.
  bool equivalence_checked = false;
  int equivalence_mismatches = 0;
  int bound_violations = 0;
  std::vector<UnitRecord> records;
  std::vector<std::string> warnings;
};

struct ExperimentRun {
  World world;
  PanelDataset train;
  InterventionPolicy policy;
  std::optional<LearnedBetas> learned;
  Metrics metrics;
};

/// Learns a policy of the given variant. Synthetic interventions needs pcr.p > 0.
InterventionPolicy learn_variant(PolicyVariant variant, const PanelDataset& train, const RewardWeights& omega,
                                 double delta, const PCRConfig& pcr, std::optional<LearnedBetas>* learned = nullptr);

/// Policy of the configured variant learned from `train` with delta_hat
/// (rank s unless configured).
InterventionPolicy learn_policy(const ExperimentConfig& config, const PanelDataset& train,
                                std::optional<LearnedBetas>* learned = nullptr);

/// RCT training panel of the world, as drawn by run_experiment.
PanelDataset generate_training(const ExperimentConfig& config, const World& world,
                               std::vector<std::string>* warnings = nullptr);

/// Generates the world and an RCT training panel, learns the policy, lets
/// test units best-respond with delta_true and scores the assignments.
ExperimentRun run_experiment_detailed(const ExperimentConfig& config);
Metrics run_experiment(const ExperimentConfig& config);

/// Scores `policy` on the test population of `world`. The regret bound uses
/// the policy's own reward estimates on the unmodified report.
Metrics evaluate_policy(const ExperimentConfig& config, const World& world, const InterventionPolicy& policy);

/// Sum_i (r_i^{d_i} - r_i^{1-d_i}) / Sum_i (r_i^{d*_i} - r_i^{1-d*_i}); `rewards` is m x 2.
double normalized_delta_revenue(const std::vector<Intervention>& assigned, const Matrix& rewards,
                                const std::vector<Intervention>& optimal);

struct SweepRow {
  double ratio = 0.0;
  double mean_ndr = 0.0;
  double std_ndr = 0.0;
  double mean_regret = 0.0;
  double misassignment = 0.0;
  std::vector<double> ndr_values;
};

/// delta_hat = ratio * delta_true for each ratio, `repetitions` seeds each.
/// `jobs` <= 0 uses the hardware concurrency. Output independent of `jobs`.
std::vector<SweepRow> delta_sweep(const ExperimentConfig& config, const std::vector<double>& ratios, int jobs = 0);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// Demonstrations

struct ImpossibilityReport {
  double alpha = 0.0, zeta = 0.0, delta = 0.0;
  double lhs = 0.0;  // zeta / 2 + alpha
  double rhs = 0.0;  // delta (sqrt(1.25) - 0.5)
  /// "VIOLATED-SoT" when lhs <= rhs, else "NO-CERTIFICATE".
  std::string verdict;
  BetaSet betas;
  int sampled_type0 = 0;
  int sampled_type1 = 0;
  Vector top_unit;
  /// Finite separation check of the top unit against the sampled lines.
  UnitSeparation top_finite;
  bool finite_satisfied = true;
  bool continuum_satisfied = true;
  /// Distance from the top unit to the shifted region of intervention 2.
  double top_distance_to_region = 0.0;
  bool top_blocked = false;
  Intervention top_achieved = 0;
  int lower_reaching_top = 0;
  bool lower_blocked = false;
  /// Smallest distance from a sampled lower unit to the unshifted type-2 cone.
  double min_lower_distance_to_cone = 0.0;
};

ImpossibilityReport demo_impossible(double alpha, double zeta, double delta, double spacing = 0.002);

struct SiFailureConfig {
  double delta = 1.0;
  /// Center distance in units of delta.
  double gap_factor = 0.5;
  double sigma = 0.02;
  int m_train = 200;
  int m_test = 500;
  std::uint64_t seed = 0;
  int rank = 2;
};

struct SiFailureReport {
  double center_distance = 0.0;
  int test_units = 0;
  int type0_units = 0;
  double si_misassignment = 0.0;
  double alg1_misassignment = 0.0;
  double si_type0_misassignment = 0.0;
  double alg1_type0_misassignment = 0.0;
};

SiFailureReport demo_si_failure(const SiFailureConfig& config);

struct GapNecessityRow {
  int n = 0;
  double threshold_minus = 0.0;
  double threshold_plus = 0.0;
  Intervention target_minus = 0;
  Intervention target_plus = 0;
  double effort_minus = 0.0;
  double effort_plus = 0.0;
  bool flips = false;
  /// n < c / alpha_small
  bool expected_flip = false;
};

struct GapNecessityReport {
  double theta1 = 0.0, theta2 = 0.0, c = 0.0, alpha_small = 0.0, delta = 0.0;
  double unit = 0.0;
  std::vector<GapNecessityRow> rows;
  bool matches_case_analysis = true;
};

GapNecessityReport demo_gap_necessity(double theta1, double theta2, double c, double alpha_small, double delta,
                                      const std::vector<int>& n_values);

}  // namespace strategio
