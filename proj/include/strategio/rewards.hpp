#pragma once

#include "strategio/common.hpp"

#include <vector>

namespace strategio {

/// Post-period weights omega_{T0+1..T}.
using RewardWeights = Vector;

/// Per-intervention reward vectors beta^{(d)} in R^{T0}, so that the expected
/// principal reward of assigning d to a unit is <beta^{(d)}, y_pre>.
struct BetaSet {
  std::vector<Vector> betas;
  /// Weak preference order of units: preference_rank[d] larger means more
  /// preferred; equal ranks mean indifference. Empty = identity order.
  std::vector<int> preference_rank;

  BetaSet() = default;
  explicit BetaSet(std::vector<Vector> b) : betas(std::move(b)) {}
  BetaSet(std::vector<Vector> b, std::vector<int> rank) : betas(std::move(b)), preference_rank(std::move(rank)) {}

  int k() const { return static_cast<int>(betas.size()); }
  int T0() const { return betas.empty() ? 0 : static_cast<int>(betas[0].size()); }
  int rank(Intervention d) const { return preference_rank.empty() ? d : preference_rank.at(d); }
  /// True when units strictly prefer a over b.
  bool prefers(Intervention a, Intervention b) const;
  /// True when a wins a reward tie against b (more preferred, then larger index).
  bool wins_tie(Intervention a, Intervention b) const;
  const Vector& operator[](Intervention d) const { return betas.at(d); }

  void validate() const;
};

struct SpanCheck {
  Vector coefficients;
  double residual_norm = 0.0;
  /// residual_norm <= 1e-9 * ||target||
  bool included = false;
};

struct TypeResult {
  Intervention type = 0;
  Vector rewards;
};

double principal_reward(const Vector& y_post, const RewardWeights& omega);

/// beta^{(d)} = U (U^T U)^{-1} sum_t omega_t u_t^{(d)} with U the T0 x s
/// control factors of the pre-period. Throws RankDeficient unless U has full
/// column rank (smallest singular value > 1e-10 * largest).
BetaSet reformulate_beta(const Matrix& pre_factors, const std::vector<Matrix>& post_factors,
                         const RewardWeights& omega);

/// Least-squares coefficients c with U_pre^T c ~= target.
SpanCheck check_span_inclusion(const Matrix& pre_factors, const Vector& target);

/// Argmax of <beta^{(d)}, y> over d; ties go to the unit-preferred intervention.
TypeResult unit_type(const Vector& y_pre_expected, const BetaSet& betas);

}  // namespace strategio
