#pragma once

#include "strategio/common.hpp"
#include "strategio/panel_model.hpp"
#include "strategio/policies.hpp"
#include "strategio/rewards.hpp"

#include <string>
#include <vector>

namespace strategio {

struct PCRConfig {
  /// Retained rank; <= 0 picks the rank at the largest spectral gap.
  int p = 0;
  double rho = 0.0;
  double min_singular_ratio = 1e-10;
};

struct PCRFit {
  Vector beta;
  Vector singular_values;
  int rank_used = 0;
};

/// beta = sum_{l <= p} s_l / (s_l^2 + rho) v_l u_l^T r over the singular
/// triplets of Y (n x T0), skipping singular values below
/// min_singular_ratio * s_1.
PCRFit pcr_fit(const Matrix& Y, const Vector& r, const PCRConfig& config);

/// Index (1-based count) after the largest ratio s_l / s_{l+1} among the
/// nonzero singular values; 1 for a single nonzero value.
int rank_by_spectral_gap(const Vector& singular_values, double min_singular_ratio = 1e-10);

/// Smallest retained singular value / (sqrt(rows) + sqrt(cols)); 0 for an
/// all-zero matrix.
double snr(const Matrix& Y, double min_singular_ratio = 1e-10);

struct LearnedBetas {
  BetaSet beta_hats;
  std::vector<Vector> singular_values;
  std::vector<double> snr;
  std::vector<int> n;
  std::vector<int> rank_used;
  std::vector<std::string> warnings;
};

/// Per-arm rewards from observed post-outcomes and per-arm PCR.
LearnedBetas learn_betas(const PanelDataset& data, const RewardWeights& omega, const PCRConfig& config);

struct LearnedTwo {
  ShiftedTwo policy;
  LearnedBetas learned;
};

struct LearnedMulti {
  ShiftedMulti policy;
  LearnedBetas learned;
};

LearnedTwo learn_two(const PanelDataset& data, const RewardWeights& omega, double delta, const PCRConfig& config);
LearnedMulti learn_multi(const PanelDataset& data, const RewardWeights& omega, double delta, const PCRConfig& config);

struct GapSpec {
  /// gamma(d, d') for d' < d; symmetric fill for convenience.
  Matrix gamma;
  double delta = 0.0;
  double sigma = 0.0;
  double beta_bar = 0.0;
  int T0 = 0;
  double alpha = 0.0;
  /// ||beta^(d) - beta_hat^(d)||, or the supplied upper bounds.
  Vector estimation_error;
};

/// (sqrt(T0) + delta)(e_d + e_d') + delta ||beta_d - beta_d'|| + 6 sigma beta_bar sqrt(2 T0 log(1/alpha))
GapSpec gap_threshold(const BetaSet& beta_true, const BetaSet& beta_hat, double delta, double sigma, double beta_bar,
                      double alpha);
/// Same formula from user-supplied estimation-error upper bounds.
GapSpec gap_threshold_from_bounds(const BetaSet& beta_true, const Vector& error_bounds, double delta, double sigma,
                                  double beta_bar, double alpha);

struct RegretCheck {
  double regret = 0.0;
  double bound = 0.0;
  bool holds = true;
};

/// regret = E r^{optimal} - E r^{assigned}; bound = sum_d |r_hat^d - E r^d|.
RegretCheck regret_decomposition(Intervention assigned, Intervention optimal, const Vector& estimated_rewards,
                                 const Vector& expected_rewards);

}  // namespace strategio
