#include "strategio/estimation.hpp"

#include <algorithm>
#include <cmath>

namespace strategio {

namespace {

int retained(const Vector& sv, double ratio) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int q = 0;
  while (q < sv.size() && sv(q) > ratio * sv(0)) ++q;
  return q;
}

}  // namespace

int rank_by_spectral_gap(const Vector& singular_values, double min_singular_ratio) {
  const int q = retained(singular_values, min_singular_ratio);
  if (q <= 1) return std::max(q, 1);
  // A numerically zero tail is the largest possible gap.
  if (q < singular_values.size()) return q;
  int best = q;
  double best_ratio = 0.0;
  for (int l = 0; l + 1 < q; ++l) {
    const double ratio = singular_values(l) / singular_values(l + 1);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = l + 1;
    }
  }
  return best;
}

PCRFit pcr_fit(const Matrix& Y, const Vector& r, const PCRConfig& config) {
  require(Y.rows() > 0 && Y.cols() > 0, ErrorCode::InvalidArgument, "empty design matrix");
  require(r.size() == Y.rows(), ErrorCode::DimensionMismatch,
          "reward vector has length " + std::to_string(r.size()) + ", design has " + std::to_string(Y.rows()) + " rows");
  require(config.rho >= 0.0, ErrorCode::InvalidArgument, "rho must be >= 0");
  const int budget = static_cast<int>(std::min(Y.rows(), Y.cols()));
  require(config.p <= budget, ErrorCode::InvalidArgument,
          "rank " + std::to_string(config.p) + " exceeds min(n, T0) = " + std::to_string(budget));

  Eigen::JacobiSVD<Matrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PCRFit fit;
  fit.singular_values = svd.singularValues();
  const int p = config.p > 0 ? config.p : rank_by_spectral_gap(fit.singular_values, config.min_singular_ratio);
  const int q = std::min(p, retained(fit.singular_values, config.min_singular_ratio));
  fit.rank_used = q;
  fit.beta = Vector::Zero(Y.cols());
  for (int l = 0; l < q; ++l) {
    const double s = fit.singular_values(l);
    fit.beta += (s / (s * s + config.rho)) * svd.matrixU().col(l).dot(r) * svd.matrixV().col(l);
  }
  return fit;
}

double snr(const Matrix& Y, double min_singular_ratio) {
  require(Y.rows() > 0 && Y.cols() > 0, ErrorCode::InvalidArgument, "empty matrix");
  Eigen::JacobiSVD<Matrix> svd(Y);
  const Vector& sv = svd.singularValues();
  const int q = retained(sv, min_singular_ratio);
  if (q == 0) return 0.0;
  return sv(q - 1) / (std::sqrt(static_cast<double>(Y.rows())) + std::sqrt(static_cast<double>(Y.cols())));
}

LearnedBetas learn_betas(const PanelDataset& data, const RewardWeights& omega, const PCRConfig& config) {
  require(data.k >= 2, ErrorCode::InvalidArgument, "need at least two interventions");
  require(omega.size() == data.post_length(), ErrorCode::DimensionMismatch,
          "omega has length " + std::to_string(omega.size()) + ", post-period has " +
              std::to_string(data.post_length()));
  LearnedBetas out;
  for (Intervention d = 0; d < data.k; ++d) {
    const auto units = data.arm(d);
    require(!units.empty(), ErrorCode::InvalidArgument, "arm " + std::to_string(d) + " is empty");
    Matrix Y(static_cast<Eigen::Index>(units.size()), data.T0());
    Vector r(static_cast<Eigen::Index>(units.size()));
    for (std::size_t j = 0; j < units.size(); ++j) {
      Y.row(static_cast<Eigen::Index>(j)) = data.y_pre.row(units[j]);
      r(static_cast<Eigen::Index>(j)) = principal_reward(data.y_post.row(units[j]).transpose(), omega);
    }
    PCRConfig arm_config = config;
    const int budget = static_cast<int>(std::min(Y.rows(), Y.cols()));
    if (arm_config.p > budget) {
      out.warnings.push_back("arm " + std::to_string(d) + ": rank " + std::to_string(arm_config.p) +
                             " exceeds min(n_d, T0); using " + std::to_string(budget));
      arm_config.p = budget;
    }
    const auto fit = pcr_fit(Y, r, arm_config);
    if (config.p <= 0)
      out.warnings.push_back("arm " + std::to_string(d) + ": rank " + std::to_string(fit.rank_used) +
                             " chosen by spectral gap");
    out.beta_hats.betas.push_back(fit.beta);
    out.singular_values.push_back(fit.singular_values);
    out.snr.push_back(snr(Y, config.min_singular_ratio));
    out.n.push_back(static_cast<int>(units.size()));
    out.rank_used.push_back(fit.rank_used);
  }
  if (config.p > 0 && data.k > 2 * config.p)
    out.warnings.push_back("k is large relative to the rank; arms may be poorly balanced");
  return out;
}

namespace {

void check_distinct(const BetaSet& b) {
  for (Intervention d = 0; d < b.k(); ++d)
    for (Intervention e = d + 1; e < b.k(); ++e) {
      const double scale = std::max({1.0, b[d].norm(), b[e].norm()});
      require((b[d] - b[e]).norm() > 1e-12 * scale, ErrorCode::Degenerate,
              "estimated betas of interventions " + std::to_string(d) + " and " + std::to_string(e) +
                  " coincide; the decision normal is zero");
    }
}

}  // namespace

LearnedTwo learn_two(const PanelDataset& data, const RewardWeights& omega, double delta, const PCRConfig& config) {
  require(data.k == 2, ErrorCode::InvalidArgument, "learn_two needs exactly two interventions");
  require(delta >= 0.0, ErrorCode::InvalidArgument, "delta must be >= 0");
  LearnedTwo out;
  out.learned = learn_betas(data, omega, config);
  check_distinct(out.learned.beta_hats);
  out.policy = ShiftedTwo{out.learned.beta_hats[0], out.learned.beta_hats[1], delta};
  return out;
}

LearnedMulti learn_multi(const PanelDataset& data, const RewardWeights& omega, double delta, const PCRConfig& config) {
  require(delta >= 0.0, ErrorCode::InvalidArgument, "delta must be >= 0");
  LearnedMulti out;
  out.learned = learn_betas(data, omega, config);
  check_distinct(out.learned.beta_hats);
  out.policy = ShiftedMulti{out.learned.beta_hats, delta};
  return out;
}

GapSpec gap_threshold_from_bounds(const BetaSet& beta_true, const Vector& error_bounds, double delta, double sigma,
                                  double beta_bar, double alpha) {
  beta_true.validate();
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  require(delta >= 0.0 && sigma >= 0.0, ErrorCode::InvalidArgument, "delta and sigma must be >= 0");
  require(error_bounds.size() == beta_true.k(), ErrorCode::DimensionMismatch, "need one error bound per intervention");
  double max_abs = 0.0;
  for (const auto& b : beta_true.betas) max_abs = std::max(max_abs, b.cwiseAbs().maxCoeff());
  require(beta_bar >= max_abs, ErrorCode::InvalidArgument, "beta_bar must bound every |beta| entry");

  GapSpec g;
  g.delta = delta;
  g.sigma = sigma;
  g.beta_bar = beta_bar;
  g.T0 = beta_true.T0();
  g.alpha = alpha;
  g.estimation_error = error_bounds;
  const int k = beta_true.k();
  const double noise = 6.0 * sigma * beta_bar * std::sqrt(2.0 * g.T0 * std::log(1.0 / alpha));
  g.gamma = Matrix::Zero(k, k);
  for (int d = 0; d < k; ++d)
    for (int e = 0; e < d; ++e) {
      const double value = (std::sqrt(static_cast<double>(g.T0)) + delta) * (error_bounds(d) + error_bounds(e)) +
                           delta * (beta_true[d] - beta_true[e]).norm() + noise;
      g.gamma(d, e) = value;
      g.gamma(e, d) = value;
    }
  return g;
}

GapSpec gap_threshold(const BetaSet& beta_true, const BetaSet& beta_hat, double delta, double sigma, double beta_bar,
                      double alpha) {
  require(beta_hat.k() == beta_true.k() && beta_hat.T0() == beta_true.T0(), ErrorCode::DimensionMismatch,
          "true and estimated betas differ in shape");
  Vector errors(beta_true.k());
  for (int d = 0; d < beta_true.k(); ++d) errors(d) = (beta_true[d] - beta_hat[d]).norm();
  return gap_threshold_from_bounds(beta_true, errors, delta, sigma, beta_bar, alpha);
}

RegretCheck regret_decomposition(Intervention assigned, Intervention optimal, const Vector& estimated_rewards,
                                 const Vector& expected_rewards) {
  require(estimated_rewards.size() == expected_rewards.size(), ErrorCode::DimensionMismatch,
          "reward vectors differ in length");
  require(assigned >= 0 && assigned < expected_rewards.size() && optimal >= 0 && optimal < expected_rewards.size(),
          ErrorCode::InvalidArgument, "intervention out of range");
  RegretCheck c;
  c.regret = expected_rewards(optimal) - expected_rewards(assigned);
  c.bound = (estimated_rewards - expected_rewards).cwiseAbs().sum();
  c.holds = c.regret <= c.bound + 1e-9;
  return c;
}

}  // namespace strategio
