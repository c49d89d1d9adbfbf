#pragma once

#include "strategio/estimation.hpp"
#include "strategio/geometry.hpp"
#include "strategio/harness.hpp"
#include "strategio/panel_model.hpp"
#include "strategio/policies.hpp"
#include "strategio/rewards.hpp"

#include <json.hpp>

#include <string>

namespace strategio {

using Json = nlohmann::json;

/// Wraps JSON library errors into Error(Parse).
Json parse_json(const std::string& text);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

/// {"k", "T0", "betas", optional "preference_rank"}
Json to_json(const BetaSet& b);
BetaSet beta_set_from_json(const Json& j);

/// [{"a", "b", "strict"}, ...]
Json to_json(const Region& r);
Region region_from_json(const Json& j);

Json to_json(const PanelDataset& d);
PanelDataset dataset_from_json(const Json& j);

/// Tagged by "variant". Synthetic interventions embeds its donors unless
/// `donors_path` is given, in which case the path and T0 are stored instead.
Json to_json(const InterventionPolicy& p, const std::string& donors_path = "");
/// `base_dir` resolves a relative donors_path.
InterventionPolicy policy_from_json(const Json& j, const std::string& base_dir = "");

Json to_json(const LearnedBetas& l);
Json to_json(const GapSpec& g);
Json to_json(const ProjectionResult& r);
Json to_json(const BestResponseOutcome& o);
Json to_json(const SeparationReport& r, bool include_units = true);

Json to_json(const LatentFactorSpec& s);
LatentFactorSpec spec_from_json(const Json& j);
/// Ground truth of a generated world: spec, omega, betas and unit factors.
Json to_json(const World& w);

Json to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const Json& j);

Json to_json(const Metrics& m, bool include_records = false);
Json to_json(const std::vector<SweepRow>& rows);
Json to_json(const ImpossibilityReport& r);
Json to_json(const SiFailureReport& r);
Json to_json(const GapNecessityReport& r);

}  // namespace strategio
