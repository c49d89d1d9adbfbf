#include "strategio/panel_model.hpp"

#include "strategio/rng.hpp"

#include <cmath>
#include <sstream>

namespace strategio {

void LatentFactorSpec::validate() const {
  require(s >= 1, ErrorCode::InvalidArgument, "latent dimension s must be positive");
  require(T0 >= 1 && T > T0, ErrorCode::InvalidArgument, "horizon must satisfy 1 <= T0 < T");
  require(k >= 1, ErrorCode::InvalidArgument, "need at least one intervention");
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "sigma must be finite and >= 0");
  require(static_cast<int>(factors.size()) == k, ErrorCode::DimensionMismatch,
          "expected " + std::to_string(k) + " factor matrices, got " + std::to_string(factors.size()));
  for (int d = 0; d < k; ++d) {
    const auto& U = factors[d];
    require(U.rows() == T && U.cols() == s, ErrorCode::DimensionMismatch,
            "factor matrix for intervention " + std::to_string(d) + " must be " + std::to_string(T) + "x" +
                std::to_string(s));
  }
}

std::vector<int> PanelDataset::arm(Intervention d) const {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(assigned.size()); ++i)
    if (assigned[i] == d) idx.push_back(i);
  return idx;
}

std::vector<std::vector<int>> PanelDataset::arms() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
  for (int i = 0; i < static_cast<int>(assigned.size()); ++i) out[assigned[i]].push_back(i);
  return out;
}

CounterfactualPanel generate_counterfactuals(const LatentFactorSpec& spec, const UnitFactors& V,
                                             std::uint64_t seed, const GenerationOptions& options) {
  spec.validate();
  require(V.cols() == spec.s, ErrorCode::DimensionMismatch,
          "unit factors have dimension " + std::to_string(V.cols()) + ", spec has s=" + std::to_string(spec.s));
  const int m = static_cast<int>(V.rows());
  require(options.unit_noise_scale.size() == 0 || options.unit_noise_scale.size() == m,
          ErrorCode::DimensionMismatch, "unit_noise_scale must have one entry per unit");

  CounterfactualPanel panel;
  panel.T0 = spec.T0;
  panel.seed = seed;
  panel.expected.reserve(spec.k);
  for (int d = 0; d < spec.k; ++d) panel.expected.push_back(V * spec.factors[d].transpose());

  for (int d = 0; d < spec.k; ++d) {
    const Matrix& E = panel.expected[d];
    for (int i = 0; i < m; ++i)
      for (int t = 0; t < spec.T; ++t) {
        if (std::abs(E(i, t)) <= 1.0) continue;
        std::ostringstream msg;
        msg << "expected outcome |" << E(i, t) << "| > 1 at unit " << i << ", intervention " << d << ", t "
            << t + 1;
        if (options.bound_check == BoundCheck::Error) fail(ErrorCode::BoundViolation, msg.str());
        if (options.bound_check == BoundCheck::Warn) panel.warnings.push_back(msg.str());
      }
  }

  panel.noisy = panel.expected;
  if (spec.sigma > 0.0) {
    const int post = spec.post_length();
    for (int i = 0; i < m; ++i) {
      const double sd = spec.sigma * (options.unit_noise_scale.size() ? options.unit_noise_scale[i] : 1.0);
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
      for (int t = 0; t < spec.T0; ++t) {
        const double eps = rng.truncated_normal(sd);
        for (int d = 0; d < spec.k; ++d) panel.noisy[d](i, t) += eps;
      }
      for (int d = 0; d < spec.k; ++d)
        for (int t = 0; t < post; ++t) panel.noisy[d](i, spec.T0 + t) += rng.truncated_normal(sd);
    }
  }
  return panel;
}

PanelDataset observe(const CounterfactualPanel& panel, const std::vector<Intervention>& assignment) {
  const int m = panel.units();
  require(static_cast<int>(assignment.size()) == m, ErrorCode::DimensionMismatch,
          "assignment has " + std::to_string(assignment.size()) + " entries for " + std::to_string(m) + " units");
  const int k = panel.interventions();
  const int T0 = panel.T0;
  const int post = panel.horizon() - T0;

  PanelDataset data;
  data.k = k;
  data.assigned = assignment;
  data.y_pre = panel.noisy_pre();
  data.y_post.resize(m, post);
  for (int i = 0; i < m; ++i) {
    const int d = assignment[i];
    require(d >= 0 && d < k, ErrorCode::InvalidArgument,
            "unit " + std::to_string(i) + " assigned out-of-range intervention " + std::to_string(d));
    data.y_post.row(i) = panel.noisy[d].row(i).segment(T0, post);
  }
  return data;
}

std::vector<Intervention> rct_assign(int m, int k, std::uint64_t seed) {
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  require(m >= k, ErrorCode::InvalidArgument,
          "cannot give every arm a unit: m=" + std::to_string(m) + " < k=" + std::to_string(k));
  std::vector<Intervention> out(static_cast<std::size_t>(m));
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = Rng::stream(seed, attempt);
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (auto& d : out) {
      d = static_cast<Intervention>(rng.below(static_cast<std::uint64_t>(k)));
      ++count[d];
    }
    bool all_nonempty = true;
    for (int c : count) all_nonempty = all_nonempty && c > 0;
    if (all_nonempty) return out;
  }
}

}  // namespace strategio
