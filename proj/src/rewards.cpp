#include "strategio/rewards.hpp"

#include <cmath>

namespace strategio {

bool BetaSet::prefers(Intervention a, Intervention b) const { return rank(a) > rank(b); }

bool BetaSet::wins_tie(Intervention a, Intervention b) const {
  if (rank(a) != rank(b)) return rank(a) > rank(b);
  return a > b;
}

void BetaSet::validate() const {
  require(k() >= 2, ErrorCode::InvalidArgument, "a beta set needs k >= 2 interventions");
  for (const auto& b : betas) {
    require(b.size() == T0(), ErrorCode::DimensionMismatch, "all betas must have the same length");
    require(b.allFinite(), ErrorCode::InvalidArgument, "betas must be finite");
  }
  require(preference_rank.empty() || static_cast<int>(preference_rank.size()) == k(),
          ErrorCode::DimensionMismatch, "preference_rank must have one entry per intervention");
}

double principal_reward(const Vector& y_post, const RewardWeights& omega) {
  require(y_post.size() == omega.size(), ErrorCode::DimensionMismatch,
          "post-period length " + std::to_string(y_post.size()) + " does not match " +
              std::to_string(omega.size()) + " weights");
  return omega.dot(y_post);
}

BetaSet reformulate_beta(const Matrix& pre_factors, const std::vector<Matrix>& post_factors,
                         const RewardWeights& omega) {
  const auto s = pre_factors.cols();
  require(pre_factors.rows() >= 1 && s >= 1, ErrorCode::DimensionMismatch, "empty pre-period factor matrix");
  Eigen::JacobiSVD<Matrix> svd(pre_factors, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  require(pre_factors.rows() >= s && sv(s - 1) > 1e-10 * sv(0), ErrorCode::RankDeficient,
          "pre-period factors are not full column rank (T0=" + std::to_string(pre_factors.rows()) +
              ", s=" + std::to_string(s) + ")");

  BetaSet out;
  for (const auto& post : post_factors) {
    require(post.cols() == s && post.rows() == omega.size(), ErrorCode::DimensionMismatch,
            "post-period factors must be (T-T0) x s");
    const Vector w = post.transpose() * omega;  // sum_t omega_t u_t^{(d)}
    // U (U^T U)^{-1} w = A S^{-1} B^T w  for U = A S B^T
    out.betas.push_back(svd.matrixU() * (svd.matrixV().transpose() * w).cwiseQuotient(sv));
  }
  return out;
}

SpanCheck check_span_inclusion(const Matrix& pre_factors, const Vector& target) {
  require(pre_factors.cols() == target.size(), ErrorCode::DimensionMismatch,
          "target must have length s = " + std::to_string(pre_factors.cols()));
  const Matrix A = pre_factors.transpose();  // s x T0
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  cod.setThreshold(1e-12);
  SpanCheck out;
  out.coefficients = cod.solve(target);
  out.residual_norm = (A * out.coefficients - target).norm();
  out.included = out.residual_norm <= 1e-9 * target.norm();
  return out;
}

TypeResult unit_type(const Vector& y, const BetaSet& betas) {
  TypeResult out;
  out.rewards.resize(betas.k());
  for (int d = 0; d < betas.k(); ++d) {
    require(betas[d].size() == y.size(), ErrorCode::DimensionMismatch, "pre-period length mismatch");
    out.rewards(d) = betas[d].dot(y);
  }
  out.type = 0;
  for (int d = 1; d < betas.k(); ++d) {
    const double r = out.rewards(d), best = out.rewards(out.type);
    if (r > best || (r == best && betas.wins_tie(d, out.type))) out.type = d;
  }
  return out;
}

}  // namespace strategio
