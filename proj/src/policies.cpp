#include "strategio/policies.hpp"

#include "strategio/estimation.hpp"
#include "strategio/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

namespace strategio {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

Intervention argmax_ties_high(const Vector& rewards) {
  Intervention best = 0;
  for (Eigen::Index d = 1; d < rewards.size(); ++d)
    if (rewards(d) >= rewards(best)) best = static_cast<Intervention>(d);
  return best;
}

void check_dim(const InterventionPolicy& policy, const Vector& y) {
  const int dim = policy_dim(policy);
  require(dim < 0 || y.size() == dim, ErrorCode::DimensionMismatch,
          "report has length " + std::to_string(y.size()) + ", policy expects " + std::to_string(dim));
}

}  // namespace

SyntheticInterventions make_synthetic_interventions(PanelDataset donors, RewardWeights omega, int rank) {
  require(rank >= 1, ErrorCode::InvalidArgument, "rank must be >= 1");
  require(donors.k >= 2, ErrorCode::InvalidArgument, "synthetic interventions needs k >= 2");
  require(omega.size() == donors.post_length(), ErrorCode::DimensionMismatch,
          "omega length does not match the donors' post-period");
  SyntheticInterventions si;
  si.rank = rank;
  auto fits = std::make_shared<std::vector<SyntheticInterventions::ArmFit>>();
  for (Intervention d = 0; d < donors.k; ++d) {
    SyntheticInterventions::ArmFit fit;
    fit.units = donors.arm(d);
    const int n = static_cast<int>(fit.units.size());
    require(n > 0, ErrorCode::InvalidArgument, "arm " + std::to_string(d) + " has no donor units");
    require(rank <= std::min(n, donors.T0()), ErrorCode::InvalidArgument,
            "rank " + std::to_string(rank) + " exceeds min(n_d, T0) for arm " + std::to_string(d));
    Matrix design(donors.T0(), n);  // time x donors
    fit.rewards.resize(n);
    for (int j = 0; j < n; ++j) {
      design.col(j) = donors.y_pre.row(fit.units[j]).transpose();
      fit.rewards(j) = omega.dot(donors.y_post.row(fit.units[j]).transpose());
    }
    Eigen::JacobiSVD<Matrix> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    int q = 0;
    while (q < rank && q < sv.size() && sv(q) > 1e-10 * sv(0)) ++q;
    fit.left = svd.matrixU().leftCols(q);
    fit.singular = sv.head(q);
    fit.right = svd.matrixV().leftCols(q);
    fits->push_back(std::move(fit));
  }
  si.fits = std::move(fits);
  si.donors = std::move(donors);
  si.omega = std::move(omega);
  return si;
}

Vector si_predicted_rewards(const SyntheticInterventions& policy, const Vector& y) {
  require(policy.fits != nullptr, ErrorCode::InvalidArgument, "synthetic interventions policy was not fitted");
  Vector out(static_cast<Eigen::Index>(policy.fits->size()));
  for (std::size_t d = 0; d < policy.fits->size(); ++d) {
    const auto& fit = (*policy.fits)[d];
    // donor weights w = V S^{-1} U^T y, predicted reward = <w, donor rewards>
    const Vector weights = fit.right * (fit.left.transpose() * y).cwiseQuotient(fit.singular);
    out(static_cast<Eigen::Index>(d)) = weights.dot(fit.rewards);
  }
  return out;
}

BetaSet si_effective_betas(const SyntheticInterventions& policy) {
  require(policy.fits != nullptr, ErrorCode::InvalidArgument, "synthetic interventions policy was not fitted");
  BetaSet out;
  for (const auto& fit : *policy.fits)
    out.betas.push_back(fit.left * (fit.right.transpose() * fit.rewards).cwiseQuotient(fit.singular));
  return out;
}

std::string variant_name(const InterventionPolicy& policy) {
  return std::visit(overloaded{[](const ShiftedTwo&) { return std::string("shifted-two"); },
                               [](const ShiftedMulti&) { return std::string("shifted-multi"); },
                               [](const MinIndexMembership&) { return std::string("min-index"); },
                               [](const Naive&) { return std::string("naive"); },
                               [](const SyntheticInterventions&) { return std::string("si"); }},
                    policy);
}

int policy_k(const InterventionPolicy& policy) {
  return std::visit(overloaded{[](const ShiftedTwo&) { return 2; },
                               [](const ShiftedMulti& p) { return p.betas.k(); },
                               [](const MinIndexMembership& p) { return p.k(); },
                               [](const Naive& p) { return p.betas.k(); },
                               [](const SyntheticInterventions& p) { return p.donors.k; }},
                    policy);
}

int policy_dim(const InterventionPolicy& policy) {
  return std::visit(overloaded{[](const ShiftedTwo& p) { return static_cast<int>(p.beta0.size()); },
                               [](const ShiftedMulti& p) { return p.betas.T0(); },
                               [](const MinIndexMembership& p) {
                                 if (p.betas) return p.betas->T0();
                                 for (const auto& group : p.centers_by_type)
                                   if (!group.empty()) return static_cast<int>(group.front().size());
                                 return -1;
                               },
                               [](const Naive& p) { return p.betas.T0(); },
                               [](const SyntheticInterventions& p) { return p.donors.T0(); }},
                    policy);
}

std::vector<int> policy_preference(const InterventionPolicy& policy) {
  const int k = policy_k(policy);
  std::vector<int> identity(static_cast<std::size_t>(k));
  for (int d = 0; d < k; ++d) identity[static_cast<std::size_t>(d)] = d;
  auto from = [&](const BetaSet& b) { return b.preference_rank.empty() ? identity : b.preference_rank; };
  return std::visit(overloaded{[&](const ShiftedTwo&) { return identity; },
                               [&](const ShiftedMulti& p) { return from(p.betas); },
                               [&](const MinIndexMembership& p) { return p.betas ? from(*p.betas) : identity; },
                               [&](const Naive& p) { return from(p.betas); },
                               [&](const SyntheticInterventions&) { return identity; }},
                    policy);
}

Assignment assign_detailed(const InterventionPolicy& policy, const Vector& y) {
  check_dim(policy, y);
  return std::visit(
      overloaded{
          [&](const ShiftedTwo& p) {
            const Vector diff = p.beta1 - p.beta0;
            return Assignment{diff.dot(y) - p.delta * diff.norm() > 0.0 ? 1 : 0, false};
          },
          [&](const ShiftedMulti& p) {
            const int k = p.betas.k();
            for (Intervention d = 0; d < k; ++d) {
              bool ok = true;
              for (Intervention other = 0; other < k && ok; ++other) {
                if (other == d) continue;
                const Vector diff = p.betas[d] - p.betas[other];
                const double margin = diff.dot(y), shift = p.delta * diff.norm();
                ok = other < d ? margin - shift > 0.0 : margin + shift >= 0.0;
              }
              if (ok) return Assignment{d, false};
            }
            return Assignment{0, true};
          },
          [&](const MinIndexMembership& p) {
            for (Intervention d = 0; d < p.k(); ++d) {
              const bool inside = p.betas ? in_type_ball(y, *p.betas, d, p.delta)
                                          : in_ball(y, p.centers_by_type[static_cast<std::size_t>(d)], p.delta);
              if (inside) return Assignment{d, false};
            }
            return Assignment{0, false};
          },
          [&](const Naive& p) {
            Vector rewards(p.betas.k());
            for (Intervention d = 0; d < p.betas.k(); ++d) rewards(d) = p.betas[d].dot(y);
            return Assignment{argmax_ties_high(rewards), false};
          },
          [&](const SyntheticInterventions& p) { return Assignment{argmax_ties_high(si_predicted_rewards(p, y)), false}; }},
      policy);
}

namespace {

Region naive_region(const BetaSet& betas, Intervention d) {
  Region r;
  for (Intervention other = 0; other < betas.k(); ++other) {
    if (other == d) continue;
    Halfspace h{betas[d] - betas[other], 0.0, other > d};
    if (h.trivially_true()) continue;
    r.halfspaces.push_back(std::move(h));
  }
  return r;
}

}  // namespace

Region region(const InterventionPolicy& policy, Intervention d) {
  const int k = policy_k(policy);
  require(d >= 0 && d < k, ErrorCode::InvalidArgument, "intervention " + std::to_string(d) + " out of range");
  return std::visit(
      overloaded{[&](const ShiftedTwo& p) {
                   const Vector diff = p.beta1 - p.beta0;
                   const double shift = p.delta * diff.norm();
                   Region r;
                   if (d == 1)
                     r.halfspaces.push_back({diff, shift, true});
                   else
                     r.halfspaces.push_back({Vector(-diff), -shift, false});
                   return r;
                 },
                 [&](const ShiftedMulti& p) { return shifted_region(p.betas, d, p.delta); },
                 [&](const Naive& p) { return naive_region(p.betas, d); },
                 [&](const MinIndexMembership&) -> Region {
                   fail(ErrorCode::Unsupported, "min-index policy regions are non-polyhedral");
                 },
                 [&](const SyntheticInterventions&) -> Region {
                   fail(ErrorCode::Unsupported, "synthetic-interventions regions are non-polyhedral");
                 }},
      policy);
}

double strict_margin(const Vector& y) { return 1e-9 * (1.0 + y.norm()); }

namespace {

struct Candidate {
  Vector point;
  double effort = kInf;
  bool exact = true;
};

using TargetFn = std::function<std::optional<Candidate>(Intervention)>;

BestResponseOutcome search_levels(const std::vector<int>& rank, Intervention current, const Vector& y, double delta,
                                  const TargetFn& target) {
  const int k = static_cast<int>(rank.size());
  std::set<int, std::greater<>> levels;
  for (int d = 0; d < k; ++d)
    if (rank[static_cast<std::size_t>(d)] > rank[static_cast<std::size_t>(current)])
      levels.insert(rank[static_cast<std::size_t>(d)]);

  for (int level : levels) {
    std::optional<Candidate> best;
    Intervention best_d = -1;
    for (Intervention d = k - 1; d >= 0; --d) {
      if (rank[static_cast<std::size_t>(d)] != level) continue;
      auto c = target(d);
      if (!c || c->effort > delta + strict_margin(y)) continue;
      if (!best || c->effort < best->effort) {
        best = std::move(c);
        best_d = d;
      }
    }
    if (best) return {best->point, best_d, best->effort, true, best->exact};
  }
  return {y, current, 0.0, false, true};
}

std::optional<Candidate> polyhedral_target(const Region& r, const Vector& y,
                                           const std::function<bool(const Vector&)>& member) {
  const auto proj = project_onto_region(y, r, {1e-9, strict_margin(y), 0});
  if (!proj.feasible) return std::nullopt;
  if (member(proj.point)) return Candidate{proj.point, proj.distance, true};
  // A point on a closed face can fall on the wrong side of a tie once the
  // assignment rule recomputes it; step inside every face instead.
  Region inner = r;
  for (auto& h : inner.halfspaces) h.strict = true;
  const auto retry = project_onto_region(y, inner, {1e-9, strict_margin(y), 0});
  if (!retry.feasible || !member(retry.point)) return std::nullopt;
  return Candidate{retry.point, retry.distance, true};
}

// Approximate nearest point of {x : member(x)} by alternating between the
// target ball and escapes from lower balls, then shrinking toward y.
std::optional<Candidate> ball_search(const Vector& y, double delta, const std::function<bool(const Vector&)>& member,
                                     const std::function<Vector(const Vector&)>& to_target,
                                     const std::function<std::optional<Vector>(const Vector&)>& escape_lower,
                                     const std::vector<Vector>& extra_starts) {
  std::vector<Vector> starts{y};
  starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());
  Rng rng(0xb35f);
  for (int j = 0; j < 16; ++j) {
    Vector u(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) u(i) = rng.normal();
    starts.push_back(y + delta * u / std::max(u.norm(), 1e-300));
  }

  std::optional<Candidate> best;
  for (const auto& s : starts) {
    Vector x = s;
    for (int it = 0; it < 60; ++it) {
      x = to_target(x);
      if (member(x)) break;
      auto pushed = escape_lower(x);
      if (!pushed) break;
      x = *pushed;
    }
    if (!member(x)) continue;
    // bisect along the segment y -> x for a closer member point
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (member(y + mid * (x - y)))
        hi = mid;
      else
        lo = mid;
    }
    const Vector p = y + hi * (x - y);
    const double effort = (p - y).norm();
    if (!best || effort < best->effort) best = Candidate{p, effort, false};
  }
  return best;
}

Vector project_onto_neighbourhood(const Vector& x, const Region& core, double radius) {
  const auto proj = project_onto_region(x, core);
  if (!proj.feasible || proj.distance <= radius) return x;
  return proj.point + (x - proj.point) * (radius / proj.distance);
}

std::optional<Candidate> min_index_target(const MinIndexMembership& p, Intervention d, const Vector& y, double delta) {
  const double margin = 4.0 * strict_margin(y);
  auto member = [&](const Vector& x) { return assign_detailed(InterventionPolicy{p}, x).d == d; };

  if (p.betas) {
    const Region core = type_region(*p.betas, d);
    auto to_target = [&](const Vector& x) { return project_onto_neighbourhood(x, core, p.delta); };
    auto escape = [&](const Vector& x) -> std::optional<Vector> {
      for (Intervention lower = 0; lower < d; ++lower) {
        const auto proj = project_onto_region(x, type_region(*p.betas, lower));
        if (!proj.feasible || proj.distance > p.delta + 1e-9) continue;
        Vector dir = x - proj.point;
        if (dir.norm() == 0.0) dir = p.betas->betas[static_cast<std::size_t>(d)] - p.betas->betas[static_cast<std::size_t>(lower)];
        if (dir.norm() == 0.0) return std::nullopt;
        return Vector(proj.point + (p.delta + margin) * dir / dir.norm());
      }
      return std::nullopt;
    };
    const Vector nearest = to_target(y);
    if (member(nearest)) return Candidate{nearest, (nearest - y).norm(), true};
    return ball_search(y, delta, member, to_target, escape, {nearest});
  }

  const auto& centers = p.centers_by_type[static_cast<std::size_t>(d)];
  if (centers.empty()) return std::nullopt;
  auto to_target = [&](const Vector& x) {
    Vector best = x;
    double best_dist = kInf;
    for (const auto& c : centers) {
      const Vector diff = x - c;
      const double n = diff.norm();
      const Vector q = n <= p.delta ? x : Vector(c + diff * (p.delta / n));
      const double dist = (q - x).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = q;
      }
    }
    return best;
  };
  auto escape = [&](const Vector& x) -> std::optional<Vector> {
    for (Intervention lower = 0; lower < d; ++lower)
      for (const auto& c : p.centers_by_type[static_cast<std::size_t>(lower)]) {
        const Vector diff = x - c;
        const double n = diff.norm();
        if (n > p.delta) continue;
        if (n == 0.0) return std::nullopt;
        return Vector(c + diff * ((p.delta + margin) / n));
      }
    return std::nullopt;
  };
  const Vector nearest = to_target(y);
  if (member(nearest)) return Candidate{nearest, (nearest - y).norm(), true};
  std::vector<Vector> starts{nearest};
  for (const auto& c : centers) starts.push_back(c);
  return ball_search(y, delta, member, to_target, escape, starts);
}

}  // namespace

BestResponseOutcome best_response_over_regions(const std::vector<Region>& regions,
                                               const std::vector<int>& preference_rank, Intervention current,
                                               const Vector& y, double delta) {
  require(delta >= 0.0, ErrorCode::InvalidArgument, "delta must be >= 0");
  require(regions.size() == preference_rank.size(), ErrorCode::DimensionMismatch,
          "need one preference rank per region");
  require(current >= 0 && current < static_cast<int>(regions.size()), ErrorCode::InvalidArgument,
          "current assignment out of range");
  auto target = [&](Intervention d) -> std::optional<Candidate> {
    const auto proj = project_onto_region(y, regions[static_cast<std::size_t>(d)], {1e-9, strict_margin(y), 0});
    if (!proj.feasible) return std::nullopt;
    return Candidate{proj.point, proj.distance, true};
  };
  return search_levels(preference_rank, current, y, delta, target);
}

BestResponseOutcome best_response(const InterventionPolicy& policy, const Vector& y, double delta,
                                  const std::vector<int>& preference_rank) {
  require(delta >= 0.0, ErrorCode::InvalidArgument, "delta must be >= 0");
  check_dim(policy, y);
  const std::vector<int> rank = preference_rank.empty() ? policy_preference(policy) : preference_rank;
  require(static_cast<int>(rank.size()) == policy_k(policy), ErrorCode::DimensionMismatch,
          "need one preference rank per intervention");
  const Intervention current = assign(policy, y);

  auto member_of = [&](Intervention d) {
    return [&policy, d](const Vector& x) { return assign(policy, x) == d; };
  };

  TargetFn target = std::visit(
      overloaded{[&](const MinIndexMembership& p) -> TargetFn {
                   return [&p, &y, delta](Intervention d) { return min_index_target(p, d, y, delta); };
                 },
                 [&](const SyntheticInterventions& p) -> TargetFn {
                   // predictions are linear in the report, so the assignment
                   // sets are those of the naive policy on the effective betas
                   auto effective = std::make_shared<InterventionPolicy>(Naive{si_effective_betas(p)});
                   return [effective, &y, member_of](Intervention d) {
                     return polyhedral_target(region(*effective, d), y, member_of(d));
                   };
                 },
                 [&](const auto&) -> TargetFn {
                   return [&policy, &y, member_of](Intervention d) {
                     return polyhedral_target(region(policy, d), y, member_of(d));
                   };
                 }},
      policy);
  return search_levels(rank, current, y, delta, target);
}

}  // namespace strategio
