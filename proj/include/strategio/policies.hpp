#pragma once

#include "strategio/common.hpp"
#include "strategio/geometry.hpp"
#include "strategio/panel_model.hpp"
#include "strategio/rewards.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace strategio {

/// Two interventions; assigns 1 iff <beta1 - beta0, y> - delta ||beta1 - beta0|| > 0.
struct ShiftedTwo {
  Vector beta0;
  Vector beta1;
  double delta = 0.0;
};

/// k interventions with every pairwise boundary shifted by delta.
struct ShiftedMulti {
  BetaSet betas;
  double delta = 0.0;
};

/// Assigns the smallest d whose best-response ball contains the report.
/// Either finite (explicit unit centers grouped by type) or continuum
/// (balls of all possible type-d units under `betas`).
struct MinIndexMembership {
  double delta = 0.0;
  std::optional<BetaSet> betas;
  std::vector<std::vector<Vector>> centers_by_type;

  int k() const { return betas ? betas->k() : static_cast<int>(centers_by_type.size()); }
};

/// Argmax of <beta_d, y>, ties to the larger index.
struct Naive {
  BetaSet betas;
};

/// Donor-weighted counterfactual estimator: regresses the report on each
/// arm's donor pre-periods (PCR with rank p on the transposed system),
/// predicts post-period rewards and assigns the argmax.
struct SyntheticInterventions {
  PanelDataset donors;
  RewardWeights omega;
  int rank = 1;

  struct ArmFit {
    std::vector<int> units;
    Matrix left;      // T0 x q left singular vectors of the donor design (transposed)
    Vector singular;  // q retained singular values
    Matrix right;     // n_d x q right singular vectors
    Vector rewards;   // donor rewards, length n_d
  };
  /// Filled by make_synthetic_interventions.
  std::shared_ptr<const std::vector<ArmFit>> fits;
};

SyntheticInterventions make_synthetic_interventions(PanelDataset donors, RewardWeights omega, int rank);

using InterventionPolicy = std::variant<ShiftedTwo, ShiftedMulti, MinIndexMembership, Naive, SyntheticInterventions>;

std::string variant_name(const InterventionPolicy& policy);
int policy_k(const InterventionPolicy& policy);
int policy_dim(const InterventionPolicy& policy);
/// The unit preference order the policy was built with (identity when none).
std::vector<int> policy_preference(const InterventionPolicy& policy);

struct Assignment {
  Intervention d = 0;
  /// ShiftedMulti only: no intervention satisfied its rule and control was used.
  bool fallback = false;
};

Assignment assign_detailed(const InterventionPolicy& policy, const Vector& y);
inline Intervention assign(const InterventionPolicy& policy, const Vector& y) { return assign_detailed(policy, y).d; }

/// Per-arm predicted rewards of the synthetic-interventions procedure for a report y.
Vector si_predicted_rewards(const SyntheticInterventions& policy, const Vector& y);
/// The linear map y -> predicted rewards, one vector per arm.
BetaSet si_effective_betas(const SyntheticInterventions& policy);

/// Exact halfspace description of {y : assign(policy, y) = d}. Throws
/// Unsupported for MinIndexMembership and SyntheticInterventions.
Region region(const InterventionPolicy& policy, Intervention d);

struct BestResponseOutcome {
  Vector y_modified;
  Intervention achieved = 0;
  double effort = 0.0;
  bool moved = false;
  /// False when the minimum-effort point came from a sampling search.
  bool exact = true;
};

/// Interior margin used for strict boundaries: 1e-9 (1 + ||y||).
double strict_margin(const Vector& y);

/// Unit best response: the most preferred intervention reachable within
/// `delta`, at minimum effort. A unit whose current assignment is already
/// among its most preferred reachable ones does not move.
/// `preference_rank` empty = the policy's own order.
BestResponseOutcome best_response(const InterventionPolicy& policy, const Vector& y, double delta,
                                  const std::vector<int>& preference_rank = {});

/// Best response against an arbitrary partition given by one region per
/// intervention; `current` is the assignment of the unmodified report.
BestResponseOutcome best_response_over_regions(const std::vector<Region>& regions,
                                               const std::vector<int>& preference_rank, Intervention current,
                                               const Vector& y, double delta);

}  // namespace strategio
