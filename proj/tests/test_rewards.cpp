#include "strategio/rewards.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace strategio;

namespace {

Vector vec(std::initializer_list<double> xs) { return to_vector(std::vector<double>(xs)); }

// Two pre-periods with identity factors and one post-period per arm.
LatentFactorSpec three_arm_spec() {
  LatentFactorSpec spec;
  spec.s = 2;
  spec.T0 = 2;
  spec.T = 3;
  spec.k = 3;
  const double post[3][2] = {{-1.0, 0.5}, {1.0, 0.5}, {0.0, 1.0}};
  for (const auto& p : post) {
    Matrix U(3, 2);
    U << 1, 0, 0, 1, p[0], p[1];
    spec.factors.push_back(U);
  }
  return spec;
}

BetaSet three_arm_betas() { return BetaSet({vec({-1, 0.5}), vec({1, 0.5}), vec({0, 1})}); }

}  // namespace

TEST_CASE("principal reward is the weighted sum") {
  CHECK(principal_reward(vec({0.1, 0.2, 0.3}), Vector::Ones(3)) == doctest::Approx(0.6));
  CHECK(principal_reward(vec({0.1, 0.2, 0.3}), Vector::Zero(3)) == 0.0);
  for (double a : {-0.7, 0.0, 0.4}) CHECK(principal_reward(vec({a, a}), vec({1, -1})) == 0.0);
  CHECK_THROWS_AS(principal_reward(vec({1, 2}), Vector::Ones(3)), Error);
}

TEST_CASE("identity pre-factors give the summed post factors") {
  Rng rng(1);
  const Matrix pre = Matrix::Identity(3, 3);
  std::vector<Matrix> post{testing::random_matrix(rng, 4, 3), testing::random_matrix(rng, 4, 3)};
  const auto betas = reformulate_beta(pre, post, Vector::Ones(4));
  for (int d = 0; d < 2; ++d) CHECK((betas[d] - post[d].colwise().sum().transpose()).norm() < 1e-12);
}

TEST_CASE("three-arm construction recovers its betas") {
  const auto spec = three_arm_spec();
  const auto betas = testing::true_betas(spec, Vector::Ones(1));
  const auto expected = three_arm_betas();
  for (int d = 0; d < 3; ++d) CHECK((betas[d] - expected[d]).norm() < 1e-12);
}

TEST_CASE("reformulated betas reproduce direct rewards") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const int s = 1 + static_cast<int>(rng.below(4));
    const int T0 = s + static_cast<int>(rng.below(4));
    const int T = T0 + 1 + static_cast<int>(rng.below(4));
    auto w = testing::random_world(rng, s, T0, T, 3, 1);
    const Vector omega = testing::random_vector(rng, T - T0);
    const auto betas = testing::true_betas(w.spec, omega);
    for (int probe = 0; probe < 100; ++probe) {
      const Vector v = testing::random_vector(rng, s);
      const Vector y_pre = w.spec.pre_factors() * v;
      for (int d = 0; d < 3; ++d) {
        const double direct = omega.dot(w.spec.post_factors(d) * v);
        CHECK(std::abs(betas[d].dot(y_pre) - direct) <= 1e-9 * (1 + v.norm()));
      }
    }
  }
}

TEST_CASE("scaling omega scales betas and keeps types") {
  Rng rng(4);
  auto w = testing::random_world(rng, 2, 4, 6, 3, 1);
  const Vector omega = Vector::Ones(2);
  const auto b1 = testing::true_betas(w.spec, omega);
  const auto b3 = testing::true_betas(w.spec, 3.0 * omega);
  for (int d = 0; d < 3; ++d) CHECK((b3[d] - 3.0 * b1[d]).norm() < 1e-10);
  for (int probe = 0; probe < 50; ++probe) {
    const Vector y = testing::random_vector(rng, 4);
    CHECK(unit_type(y, b1).type == unit_type(y, b3).type);
  }
}

TEST_CASE("rank-deficient pre-factors are rejected") {
  Matrix pre(3, 2);
  pre << 1, 2, 2, 4, 3, 6;
  CHECK_THROWS_AS(reformulate_beta(pre, {Matrix::Ones(1, 2), Matrix::Ones(1, 2)}, Vector::Ones(1)), Error);
  try {
    reformulate_beta(pre, {Matrix::Ones(1, 2), Matrix::Ones(1, 2)}, Vector::Ones(1));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("span inclusion residuals") {
  Rng rng(6);
  const Matrix pre = testing::random_matrix(rng, 5, 3);
  // Targets live in R^s; the span is that of the rows of the pre-factors.
  const Vector inside = pre.row(0).transpose();
  auto in = check_span_inclusion(pre, inside);
  CHECK(in.included);
  CHECK(in.residual_norm < 1e-12);

  Matrix deficient(4, 3);
  deficient.col(0) = testing::random_vector(rng, 4);
  deficient.col(1) = testing::random_vector(rng, 4);
  deficient.col(2) = deficient.col(0) + deficient.col(1);
  // (1, 1, -1) is orthogonal to every row of the deficient factors.
  const Vector orth = vec({1, 1, -1});
  auto out = check_span_inclusion(deficient, orth);
  CHECK_FALSE(out.included);
  CHECK(out.residual_norm == doctest::Approx(orth.norm()).epsilon(1e-9));

  for (int rep = 0; rep < 20; ++rep) {
    const Matrix A = testing::random_matrix(rng, 5, 2) * testing::random_matrix(rng, 2, 4);
    const Vector target = testing::random_vector(rng, 4);
    const Vector fitted = testing::project_onto_columns(A.transpose(), target);
    const auto check = check_span_inclusion(A, target);
    CHECK(check.residual_norm >= 0.0);
    CHECK(std::abs(check.residual_norm - (target - fitted).norm()) < 1e-9);
  }
}

TEST_CASE("unit type with ties toward the preferred intervention") {
  const auto betas = three_arm_betas();
  auto t = unit_type(vec({0, 2}), betas);
  CHECK(t.type == 2);
  CHECK((t.rewards - vec({1, 1, 2})).norm() < 1e-12);
  t = unit_type(vec({-3, 0}), betas);
  CHECK(t.type == 0);
  CHECK((t.rewards - vec({3, -3, 0})).norm() < 1e-12);

  const BetaSet two({vec({0, 0}), vec({2, 0})});
  CHECK(unit_type(vec({0, 5}), two).type == 1);
  const BetaSet reversed({vec({0, 0}), vec({2, 0})}, {1, 0});
  CHECK(unit_type(vec({0, 5}), reversed).type == 0);
}

TEST_CASE("adding a common vector to all betas keeps the argmax") {
  Rng rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<Vector> b;
    for (int d = 0; d < 3; ++d) b.push_back(testing::random_vector(rng, 3));
    const Vector w = testing::random_vector(rng, 3);
    std::vector<Vector> shifted = b;
    for (auto& x : shifted) x += w;
    const Vector y = testing::random_vector(rng, 3);
    CHECK(unit_type(y, BetaSet(b)).type == unit_type(y, BetaSet(shifted)).type);
  }
}

TEST_CASE("beta set validation") {
  CHECK_THROWS_AS(BetaSet({vec({1, 0})}).validate(), Error);
  CHECK_THROWS_AS(BetaSet({vec({1, 0}), vec({1})}).validate(), Error);
  CHECK_THROWS_AS(BetaSet({vec({1, 0}), vec({0, 1})}, {0}).validate(), Error);
  const BetaSet weak({vec({1, 0}), vec({0, 1}), vec({1, 1})}, {0, 1, 1});
  CHECK_NOTHROW(weak.validate());
  CHECK(weak.prefers(1, 0));
  CHECK_FALSE(weak.prefers(2, 1));
  CHECK(weak.wins_tie(2, 1));
}
