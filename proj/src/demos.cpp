#include "strategio/harness.hpp"

#include "strategio/rng.hpp"

#include <cmath>
#include <limits>

namespace strategio {

ImpossibilityReport demo_impossible(double alpha, double zeta, double delta, double spacing) {
  require(alpha > 0.0 && zeta > 0.0 && delta > 0.0, ErrorCode::InvalidArgument, "alpha, zeta and delta must be > 0");
  require(spacing > 0.0, ErrorCode::InvalidArgument, "spacing must be > 0");
  ImpossibilityReport rep;
  rep.alpha = alpha;
  rep.zeta = zeta;
  rep.delta = delta;
  rep.lhs = 0.5 * zeta + alpha;
  rep.rhs = delta * (std::sqrt(1.25) - 0.5);
  rep.verdict = rep.lhs <= rep.rhs ? "VIOLATED-SoT" : "NO-CERTIFICATE";

  Vector b0(2), b1(2), b2(2);
  b0 << -1.0, 0.5;
  b1 << 1.0, 0.5;
  b2 << 0.0, 1.0;
  rep.betas = BetaSet({b0, b1, b2}, {0, 0, 1});

  // Type-0 units lie on <beta2 - beta0, v> = -alpha with v1 < 0, type-1
  // units on <beta2 - beta1, v> = -alpha with v1 > 0; sampled far enough to
  // cover every point within 2 delta of the top unit.
  std::vector<TypedUnit> units;
  const double reach = 2.0 * delta + 1.0 + zeta;
  const int samples = static_cast<int>(std::ceil(reach / spacing));
  for (int j = 1; j <= samples; ++j) {
    const double x = j * spacing;
    Vector v0(2), v1(2);
    v0 << -x, -2.0 * (alpha - x);
    v1 << x, 2.0 * (x - alpha);
    units.push_back({v0, 0});
    units.push_back({v1, 1});
  }
  rep.sampled_type0 = rep.sampled_type1 = samples;
  rep.top_unit = Vector(2);
  rep.top_unit << 0.0, zeta;
  units.push_back({rep.top_unit, 2});

  SeparationOptions options;
  options.preference_rank = rep.betas.preference_rank;
  const auto finite = separation_of_types(units, delta, options);
  rep.finite_satisfied = finite.satisfied;
  rep.top_finite = finite.units.back();
  rep.continuum_satisfied = separation_of_types_continuum(units, rep.betas, delta).satisfied;

  const InterventionPolicy policy = ShiftedMulti{rep.betas, delta};
  const Region top_region = shifted_region(rep.betas, 2, delta);
  rep.top_distance_to_region =
      project_onto_region(rep.top_unit, top_region, {1e-9, strict_margin(rep.top_unit), 0}).distance;
  const auto top = best_response(policy, rep.top_unit, delta);
  rep.top_achieved = top.achieved;
  rep.top_blocked = top.achieved != 2;

  const Region cone = type_region(rep.betas, 2);
  rep.min_lower_distance_to_cone = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < units.size(); ++i) {
    if (best_response(policy, units[i].y, delta).achieved == 2) ++rep.lower_reaching_top;
    rep.min_lower_distance_to_cone =
        std::min(rep.min_lower_distance_to_cone, project_onto_region(units[i].y, cone).distance);
  }
  rep.lower_blocked = rep.lower_reaching_top == 0;
  return rep;
}

SiFailureReport demo_si_failure(const SiFailureConfig& config) {
  require(config.delta > 0.0 && config.gap_factor > 0.0, ErrorCode::InvalidArgument, "delta and gap must be > 0");
  require(config.m_train >= 2 && config.m_test >= 0, ErrorCode::InvalidArgument, "invalid population sizes");

  // Two pre-periods with identity control factors, so a unit's expected
  // pre-outcomes equal its latent factor; three post-periods whose factors
  // sum to the betas.
  Vector b0(2), b1(2);
  b0 << -0.5, 0.5;
  b1 << 0.5, 0.5;
  LatentFactorSpec spec;
  spec.s = 2;
  spec.T0 = 2;
  spec.T = 5;
  spec.k = 2;
  spec.sigma = config.sigma;
  for (const Vector* b : {&b0, &b1}) {
    Matrix U(5, 2);
    U.topRows(2).setIdentity();
    for (int t = 2; t < 5; ++t) U.row(t) = b->transpose() / 3.0;
    spec.factors.push_back(U);
  }
  const double gap = config.gap_factor * config.delta;
  Vector c0(2), c1(2);
  c0 << -gap / 2.0, 0.5;
  c1 << gap / 2.0, 0.5;

  auto population = [&](int m, std::uint64_t tag) {
    Rng rng = Rng::stream(config.seed, tag);
    UnitFactors V(m, 2);
    for (int i = 0; i < m; ++i) V.row(i) = (rng.uniform() < 0.5 ? c0 : c1).transpose();
    return V;
  };
  const UnitFactors train_units = population(config.m_train, 1);
  const UnitFactors test_units = population(config.m_test, 2);

  const auto train_panel = generate_counterfactuals(spec, train_units, Rng::stream(config.seed, 3).next_u64());
  const auto train = observe(train_panel, rct_assign(config.m_train, 2, Rng::stream(config.seed, 4).next_u64()));
  const Vector omega = Vector::Ones(3);
  const InterventionPolicy si = make_synthetic_interventions(train, omega, config.rank);
  const InterventionPolicy alg1 = learn_two(train, omega, config.delta, {config.rank, 0.0, 1e-10}).policy;

  const auto test_panel = generate_counterfactuals(spec, test_units, Rng::stream(config.seed, 5).next_u64());
  const BetaSet betas({b0, b1});
  const Matrix exp_pre = test_panel.expected_pre(), obs_pre = test_panel.noisy_pre();

  SiFailureReport rep;
  rep.center_distance = gap;
  rep.test_units = config.m_test;
  int si_wrong = 0, alg_wrong = 0, si_wrong0 = 0, alg_wrong0 = 0;
  for (int i = 0; i < config.m_test; ++i) {
    const Vector y = obs_pre.row(i).transpose();
    const Intervention type = unit_type(exp_pre.row(i).transpose(), betas).type;
    const bool si_miss = best_response(si, y, config.delta).achieved != type;
    const bool alg_miss = best_response(alg1, y, config.delta).achieved != type;
    si_wrong += si_miss;
    alg_wrong += alg_miss;
    if (type == 0) {
      ++rep.type0_units;
      si_wrong0 += si_miss;
      alg_wrong0 += alg_miss;
    }
  }
  if (config.m_test > 0) {
    rep.si_misassignment = static_cast<double>(si_wrong) / config.m_test;
    rep.alg1_misassignment = static_cast<double>(alg_wrong) / config.m_test;
  }
  if (rep.type0_units > 0) {
    rep.si_type0_misassignment = static_cast<double>(si_wrong0) / rep.type0_units;
    rep.alg1_type0_misassignment = static_cast<double>(alg_wrong0) / rep.type0_units;
  }
  return rep;
}

GapNecessityReport demo_gap_necessity(double theta1, double theta2, double c, double alpha_small, double delta,
                                      const std::vector<int>& n_values) {
  require(theta1 < theta2, ErrorCode::InvalidArgument, "need theta1 < theta2");
  require(c > 0.0 && alpha_small > 0.0 && delta > 0.0, ErrorCode::InvalidArgument,
          "c, alpha_small and delta must be > 0");
  GapNecessityReport rep;
  rep.theta1 = theta1;
  rep.theta2 = theta2;
  rep.c = c;
  rep.alpha_small = alpha_small;
  rep.delta = delta;
  rep.unit = theta2 - delta - alpha_small;
  require(rep.unit - theta1 > 0.0 && rep.unit - theta1 < delta, ErrorCode::InvalidArgument,
          "the unit theta2 - delta - alpha_small must lie within (theta1, theta1 + delta)");

  // 1-D policy: 1 below theta1, 2 above the estimated threshold, control between.
  auto regions = [&](double threshold) {
    Vector up(1), down(1);
    up << 1.0;
    down << -1.0;
    std::vector<Region> r(3);
    r[0].halfspaces = {{up, theta1, true}, {down, -threshold, true}};
    r[1].halfspaces = {{down, -theta1, false}};
    r[2].halfspaces = {{up, threshold, false}};
    return r;
  };
  Vector y(1);
  y << rep.unit;
  const std::vector<int> identity{0, 1, 2};

  for (int n : n_values) {
    require(n > 0, ErrorCode::InvalidArgument, "n must be positive");
    GapNecessityRow row;
    row.n = n;
    row.threshold_minus = theta2 - c / n;
    row.threshold_plus = theta2 + c / n;
    const Intervention current_minus = rep.unit >= row.threshold_minus ? 2 : 0;
    const Intervention current_plus = rep.unit >= row.threshold_plus ? 2 : 0;
    const auto minus = best_response_over_regions(regions(row.threshold_minus), identity, current_minus, y, delta);
    const auto plus = best_response_over_regions(regions(row.threshold_plus), identity, current_plus, y, delta);
    row.target_minus = minus.achieved;
    row.target_plus = plus.achieved;
    row.effort_minus = minus.effort;
    row.effort_plus = plus.effort;
    row.flips = row.target_minus != row.target_plus;
    row.expected_flip = n < c / alpha_small;
    if (row.flips != row.expected_flip) rep.matches_case_analysis = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace strategio
