#pragma once

#include "strategio/common.hpp"
#include "strategio/rewards.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace strategio {

/// {y : <a, y> >= b}, or > b when strict.
struct Halfspace {
  Vector a;
  double b = 0.0;
  bool strict = false;

  /// True when the constraint holds with `margin` (a geometric distance,
  /// applied only to strict halfspaces).
  bool contains(const Vector& y, double margin = 0.0) const;
  /// a = 0 with b <= 0 (or b < 0 when strict): every point satisfies it.
  bool trivially_true() const;
};

/// Intersection of halfspaces; an empty list is all of R^n.
struct Region {
  std::vector<Halfspace> halfspaces;

  bool contains(const Vector& y, double strict_margin = 0.0) const;
  /// Throws InvalidArgument for a zero-normal halfspace that no point satisfies.
  void validate() const;
};

struct ProjectionOptions {
  double tol = 1e-9;
  /// Strict halfspaces must hold by at least this distance.
  double strict_margin = 0.0;
  /// 0 = default cap of 100 * (#halfspaces) * dim.
  int max_iterations = 0;
};

struct ProjectionResult {
  Vector point;
  double distance = 0.0;
  /// Max constraint violation + stationarity + complementarity + dual infeasibility.
  double kkt_residual = 0.0;
  int iterations = 0;
  bool feasible = false;
  bool converged = false;
  /// One multiplier per halfspace of the (validated) region, w.r.t. unit normals.
  Vector multipliers;
};

/// Euclidean projection of `y` onto `region`. Dual active-set method
/// (Goldfarb-Idnani specialised to an identity Hessian); reports an
/// infeasible region with distance = +inf.
ProjectionResult project_onto_region(const Vector& y, const Region& region, const ProjectionOptions& options = {});

/// Points whose type is d: {<beta_d - beta_d', y> >= 0 for all d' != d}.
Region type_region(const BetaSet& betas, Intervention d);

/// Type region of d with boundaries shifted by delta: strict and shrunk
/// against lower indices, relaxed against higher ones.
Region shifted_region(const BetaSet& betas, Intervention d, double delta);

/// min over centers ||y - c|| <= delta. Empty center set gives false.
bool in_ball(const Vector& y, const std::vector<Vector>& centers, double delta);

/// Membership in the best-response ball of the continuum of type-d units.
bool in_type_ball(const Vector& y, const BetaSet& betas, Intervention d, double delta, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Separation of types

struct TypedUnit {
  Vector y;
  Intervention type = 0;
};

enum class SotMode { Finite, Continuum };

enum class UnitVerdict { Satisfied, Violated, ProbablyViolated };

struct UnitSeparation {
  int unit = 0;
  Intervention type = 0;
  UnitVerdict verdict = UnitVerdict::Satisfied;
  /// Point in the unit's ball outside every lower-type ball (when satisfied).
  Vector witness;
  /// Finite: max found of min_j ||w - y_j|| - delta. Continuum: delta - distance.
  double margin = 0.0;
  /// "no-lower-types", "ascent", "grid", "grid-witness", "sampling", "qp"
  std::string certificate;
};

struct SeparationReport {
  bool satisfied = true;
  /// True when some violation verdict rests on sampling only.
  bool low_confidence = false;
  SotMode mode = SotMode::Finite;
  double delta = 0.0;
  std::vector<UnitSeparation> units;

  std::vector<int> violations() const;
};

struct SeparationOptions {
  int ascent_steps = 500;
  int random_starts = 32;
  /// Grid step is delta / grid_resolution; grid only runs for dimension <= 3.
  int grid_resolution = 200;
  std::uint64_t seed = 0x5eed;
  /// Weak preference order for "lower type"; empty = identity.
  std::vector<int> preference_rank;
};

/// Condition that no unit's best-response ball is covered by the union of
/// the balls of less-preferred types, checked on the given unit set.
SeparationReport separation_of_types(const std::vector<TypedUnit>& units, double delta,
                                     const SeparationOptions& options = {});

/// Continuum version: every type-d unit can reach the shifted region of d,
/// decided exactly by projection.
SeparationReport separation_of_types_continuum(const std::vector<TypedUnit>& units, const BetaSet& betas,
                                               double delta);

}  // namespace strategio
