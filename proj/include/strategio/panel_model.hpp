#pragma once

#include "strategio/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace strategio {

/// Ground truth of a latent-factor world.
///
/// `factors[d]` is a T x s matrix whose row t holds u_{t+1}^{(d)}. The
/// pre-intervention period uses rows [0, T0) of `factors[0]` only, since all
/// units are under control before the intervention.
struct LatentFactorSpec {
  int s = 0;
  int T0 = 0;
  int T = 0;
  int k = 0;
  std::vector<Matrix> factors;
  double sigma = 0.0;

  int post_length() const { return T - T0; }
  /// T0 x s control factors of the pre-period.
  Matrix pre_factors() const { return factors.at(0).topRows(T0); }
  /// (T-T0) x s post-period factors of intervention d.
  Matrix post_factors(Intervention d) const { return factors.at(d).bottomRows(T - T0); }

  void validate() const;
};

/// m x s matrix, row i = v_i.
using UnitFactors = Matrix;

enum class BoundCheck { Error, Warn, Off };

struct GenerationOptions {
  BoundCheck bound_check = BoundCheck::Error;
  /// Per-unit multiplier on sigma (heteroscedastic noise); empty = all ones.
  Vector unit_noise_scale;
};

struct CounterfactualPanel {
  int T0 = 0;
  /// expected[d](i, t) = <u_t^{(d)}, v_i>, m x T per intervention.
  std::vector<Matrix> expected;
  /// Same shape; pre-period noise is shared across interventions.
  std::vector<Matrix> noisy;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  int units() const { return expected.empty() ? 0 : static_cast<int>(expected[0].rows()); }
  int interventions() const { return static_cast<int>(expected.size()); }
  int horizon() const { return expected.empty() ? 0 : static_cast<int>(expected[0].cols()); }
  /// Noiseless pre-period outcomes (under control), m x T0.
  Matrix expected_pre() const { return expected.at(0).leftCols(T0); }
  /// Observed (noisy) pre-period outcomes, m x T0.
  Matrix noisy_pre() const { return noisy.at(0).leftCols(T0); }
};

/// What the principal observes: pre-period under control plus one
/// post-period trajectory per unit under its assigned intervention.
struct PanelDataset {
  int k = 0;
  Matrix y_pre;
  std::vector<Intervention> assigned;
  Matrix y_post;

  int units() const { return static_cast<int>(y_pre.rows()); }
  int T0() const { return static_cast<int>(y_pre.cols()); }
  int post_length() const { return static_cast<int>(y_post.cols()); }
  /// N^{(d)}: indices of units assigned intervention d, ascending.
  std::vector<int> arm(Intervention d) const;
  std::vector<std::vector<int>> arms() const;
};

CounterfactualPanel generate_counterfactuals(const LatentFactorSpec& spec, const UnitFactors& V,
                                             std::uint64_t seed, const GenerationOptions& options = {});

PanelDataset observe(const CounterfactualPanel& panel, const std::vector<Intervention>& assignment);

/// Uniform randomized assignment with every arm nonempty.
std::vector<Intervention> rct_assign(int m, int k, std::uint64_t seed);

}  // namespace strategio
