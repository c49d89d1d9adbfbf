#include "strategio/estimation.hpp"
#include "strategio/policies.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace strategio;

namespace {

Vector vec(std::initializer_list<double> xs) { return to_vector(std::vector<double>(xs)); }

BetaSet three_arm_betas() { return BetaSet({vec({-1, 0.5}), vec({1, 0.5}), vec({0, 1})}); }

ShiftedTwo unit_gap_policy() { return ShiftedTwo{vec({0, 0}), vec({2, 0}), 1.0}; }

BetaSet random_betas(Rng& rng, int k, int dim) {
  std::vector<Vector> b;
  for (int d = 0; d < k; ++d) b.push_back(testing::random_vector(rng, dim));
  return BetaSet(b);
}

void check_outcome_invariants(const InterventionPolicy& policy, const Vector& y, double delta,
                              const BestResponseOutcome& br) {
  CHECK(br.effort <= delta + strict_margin(y));
  CHECK(std::abs(br.effort - (br.y_modified - y).norm()) < 1e-12);
  if (!br.moved) CHECK((br.y_modified.array() == y.array()).all());
  CHECK(assign(policy, br.y_modified) == br.achieved);
  const auto rank = policy_preference(policy);
  CHECK(rank[br.achieved] >= rank[assign(policy, y)]);
}

}  // namespace

TEST_CASE("shifted two-arm assignment") {
  const InterventionPolicy p = unit_gap_policy();
  CHECK(assign(p, vec({1.001, 5})) == 1);
  CHECK(assign(p, vec({1, 5})) == 0);
  CHECK(assign(p, vec({0.5, -3})) == 0);
  CHECK(policy_k(p) == 2);
  CHECK(policy_dim(p) == 2);
  CHECK(variant_name(p) == "shifted-two");
}

TEST_CASE("naive assignment with ties to the larger index") {
  const InterventionPolicy p = Naive{three_arm_betas()};
  CHECK(assign(p, vec({0, 2})) == 2);
  CHECK(assign(p, vec({-3, 0})) == 0);
  CHECK(assign(p, vec({0, 0})) == 2);
}

TEST_CASE("shifted multi-arm assignment and fallback") {
  const InterventionPolicy p = ShiftedMulti{three_arm_betas(), 1.0};
  CHECK(assign(p, vec({0, 10})) == 2);
  auto a = assign_detailed(p, vec({0, 0.01}));
  CHECK(a.d == 0);
  CHECK_FALSE(a.fallback);
  // Arm 2 beats control by more than its shift but not arm 1, and arm 1
  // does not beat control: no rule holds.
  a = assign_detailed(p, vec({0.5, 2}));
  CHECK(a.d == 0);
  CHECK(a.fallback);
}

TEST_CASE("regions") {
  const auto r = region(unit_gap_policy(), 1);
  REQUIRE(r.halfspaces.size() == 1);
  CHECK((r.halfspaces[0].a - vec({2, 0})).norm() == 0.0);
  CHECK(r.halfspaces[0].b == doctest::Approx(2.0));
  CHECK(r.halfspaces[0].strict);

  const auto naive = region(Naive{three_arm_betas()}, 1);
  REQUIRE(naive.halfspaces.size() == 2);
  CHECK_FALSE(naive.halfspaces[0].strict);  // against 0: ties go to 1
  CHECK(naive.halfspaces[1].strict);        // against 2: ties go to 2

  MinIndexMembership mi;
  mi.delta = 1.0;
  mi.betas = three_arm_betas();
  try {
    region(mi, 0);
    FAIL("expected Unsupported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unsupported);
    CHECK(std::string(e.what()).find("non-polyhedral") != std::string::npos);
  }
}

TEST_CASE("regions describe the assignment exactly") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const int k = 2 + static_cast<int>(rng.below(3));
    const auto betas = random_betas(rng, k, 3);
    std::vector<InterventionPolicy> policies{Naive{betas}, ShiftedMulti{betas, rng.uniform(0, 0.5)}};
    if (k == 2) policies.push_back(ShiftedTwo{betas[0], betas[1], rng.uniform(0, 0.5)});
    for (const auto& p : policies)
      for (int probe = 0; probe < 50; ++probe) {
        const Vector y = testing::random_vector(rng, 3);
        const auto a = assign_detailed(p, y);
        if (a.fallback) continue;
        for (int d = 0; d < k; ++d) CHECK(region(p, d).contains(y) == (a.d == d));
      }
  }
}

TEST_CASE("best response examples") {
  const InterventionPolicy p = unit_gap_policy();
  auto br = best_response(p, vec({0.2, 0}), 1.0);
  CHECK(br.achieved == 1);
  CHECK(br.moved);
  CHECK(br.exact);
  CHECK(br.effort == doctest::Approx(0.8).epsilon(1e-8));
  CHECK(br.y_modified(0) > 1.0);
  CHECK(br.y_modified(1) == doctest::Approx(0.0));

  br = best_response(p, vec({-0.5, 0}), 1.0);
  CHECK(br.achieved == 0);
  CHECK_FALSE(br.moved);

  br = best_response(p, vec({2, 0}), 1.0);
  CHECK(br.achieved == 1);
  CHECK_FALSE(br.moved);
  CHECK(br.effort == 0.0);
}

TEST_CASE("top unit cannot reach the top arm of the shifted multi-arm policy") {
  const double zeta = 0.01;
  const Vector top = vec({0, zeta});
  const InterventionPolicy p = ShiftedMulti{three_arm_betas(), 1.0};
  const auto br = best_response(p, top, 1.0);
  CHECK(br.achieved != 2);
  const auto proj = project_onto_region(top, region(p, 2));
  CHECK(proj.distance > 1.0);
  const double oracle = testing::grid_distance_2d(top, region(p, 2), 2.5);
  CHECK(std::abs(proj.distance - oracle) < 2e-3);
}

TEST_CASE("strict margin scales with the report") {
  CHECK(strict_margin(vec({0, 0})) == doctest::Approx(1e-9));
  CHECK(strict_margin(vec({3, 4})) == doctest::Approx(6e-9));
}

TEST_CASE("two-arm shifted policy is strategyproof on noiseless instances") {
  Rng rng(1234);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int dim = 2 + static_cast<int>(rng.below(5));
    const auto betas = random_betas(rng, 2, dim);
    const double delta = rng.uniform(0.05, 1.0);
    const InterventionPolicy p = ShiftedTwo{betas[0], betas[1], delta};
    for (int i = 0; i < 20; ++i) {
      const Vector y = testing::random_vector(rng, dim);
      const auto type = unit_type(y, betas);
      if (std::abs(type.rewards(1) - type.rewards(0)) <= 1e-6) continue;
      const auto br = best_response(p, y, delta);
      CHECK(br.achieved == type.type);
      check_outcome_invariants(p, y, delta, br);
      ++checked;
    }
  }
  CHECK(checked > 1900);
}

TEST_CASE("best responses respect budget and preferences for every variant") {
  Rng rng(55);
  for (int rep = 0; rep < 15; ++rep) {
    const int k = 3;
    const auto betas = random_betas(rng, k, 2);
    const double delta = rng.uniform(0.1, 0.8);
    MinIndexMembership continuum;
    continuum.delta = delta;
    continuum.betas = betas;
    MinIndexMembership finite;
    finite.delta = delta;
    finite.centers_by_type.resize(k);
    for (int i = 0; i < 15; ++i) {
      const Vector c = testing::random_vector(rng, 2);
      finite.centers_by_type[unit_type(c, betas).type].push_back(c);
    }
    const std::vector<InterventionPolicy> policies{Naive{betas}, ShiftedMulti{betas, delta}, continuum, finite};
    for (const auto& p : policies)
      for (int i = 0; i < 10; ++i) {
        const Vector y = testing::random_vector(rng, 2);
        check_outcome_invariants(p, y, delta, best_response(p, y, delta));
      }
  }
}

TEST_CASE("continuum minimum-index policy is strategyproof with two arms") {
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto betas = random_betas(rng, 2, 2);
    const double delta = rng.uniform(0.1, 0.5);
    MinIndexMembership p;
    p.delta = delta;
    p.betas = betas;
    for (int i = 0; i < 10; ++i) {
      const Vector y = testing::random_vector(rng, 2);
      const auto type = unit_type(y, betas);
      if (std::abs(type.rewards(1) - type.rewards(0)) <= 1e-6) continue;
      CHECK(best_response(p, y, delta).achieved == type.type);
    }
  }
}

TEST_CASE("naive policy is gameable by nearby low types") {
  // Two unit types half a budget apart: type-0 units can cross the naive boundary.
  const double delta = 1.0;
  const BetaSet betas({vec({-1, 0}), vec({1, 0})});
  const InterventionPolicy naive = Naive{betas};
  const InterventionPolicy shifted = ShiftedTwo{betas[0], betas[1], delta};
  int gamed = 0, shifted_gamed = 0;
  for (double x = -0.25; x < 0; x += 0.01) {
    const Vector y = vec({x, 0.5});
    gamed += best_response(naive, y, delta).achieved == 1;
    shifted_gamed += best_response(shifted, y, delta).achieved == 1;
  }
  CHECK(gamed > 0);
  CHECK(shifted_gamed == 0);
}

TEST_CASE("best response over regions honours a weak preference order") {
  // Arms 1 and 2 are equally preferred and both reachable; the cheaper one wins.
  std::vector<Region> regions{Region{{{vec({-1}), -0.0, false}}}, Region{{{vec({1}), 0.5, true}}},
                              Region{{{vec({1}), 0.2, true}, {vec({-1}), -0.5, false}}}};
  const auto br = best_response_over_regions(regions, {0, 1, 1}, 0, vec({0}), 1.0);
  CHECK(br.achieved == 2);
  CHECK(br.effort == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("synthetic interventions on an exact design matches the true rewards") {
  Rng rng(3);
  auto w = testing::random_world(rng, 2, 4, 7, 2, 60);
  const auto panel = generate_counterfactuals(w.spec, w.V, 0);
  const auto data = observe(panel, rct_assign(60, 2, 1));
  const Vector omega = Vector::Ones(3);
  const auto si = make_synthetic_interventions(data, omega, 2);
  const auto betas = testing::true_betas(w.spec, omega);
  const auto effective = si_effective_betas(si);
  const auto expected = panel.expected_pre();
  for (int i = 0; i < 20; ++i) {
    const Vector y = expected.row(i).transpose();
    const Vector r = si_predicted_rewards(si, y);
    for (int d = 0; d < 2; ++d) {
      CHECK(std::abs(r(d) - betas[d].dot(y)) < 1e-8);
      CHECK(std::abs(r(d) - effective[d].dot(y)) < 1e-10);
    }
    CHECK(assign(si, y) == assign(Naive{effective}, y));
  }
  CHECK_THROWS_AS(region(si, 0), Error);
  CHECK_THROWS_AS(make_synthetic_interventions(data, omega, 5), Error);
}

TEST_CASE("units reach any linear region within budget despite rounding at the face") {
  // Synthetic-interventions predictions and their effective betas round
  // differently, so a target exactly on a closed face can flip.
  Rng rng(33);
  int reachable = 0;
  for (int rep = 0; rep < 20; ++rep) {
    auto w = testing::random_world(rng, 2, 2, 5, 2, 80, 0.02);
    const auto panel = generate_counterfactuals(w.spec, w.V, static_cast<std::uint64_t>(rep));
    const auto data = observe(panel, rct_assign(80, 2, static_cast<std::uint64_t>(rep) + 1));
    const InterventionPolicy si = make_synthetic_interventions(data, Vector::Ones(3), 2);
    const Region top = region(Naive{si_effective_betas(std::get<SyntheticInterventions>(si))}, 1);
    for (int i = 0; i < 50; ++i) {
      const Vector y = testing::random_vector(rng, 2, 0.5);
      if (assign(si, y) == 1) continue;
      const double distance = project_onto_region(y, top).distance;
      if (distance > 0.3 - 1e-6) continue;
      ++reachable;
      const auto br = best_response(si, y, 0.3);
      CHECK(br.achieved == 1);
      CHECK(br.effort == doctest::Approx(distance).epsilon(1e-6));
    }
  }
  CHECK(reachable > 50);
}
