#include "strategio/serialization.hpp"

#include "strategio/panel_io.hpp"

#include <filesystem>
#include <set>

namespace strategio {

namespace {

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const char* what) {
  require(j.is_object(), ErrorCode::Parse, std::string(what) + " must be a JSON object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : j.items())
    require(allowed.count(key) > 0, ErrorCode::Parse, std::string("unknown key '") + key + "' in " + what);
}

const char* verdict_name(UnitVerdict v) {
  switch (v) {
    case UnitVerdict::Satisfied: return "satisfied";
    case UnitVerdict::Violated: return "violated";
    case UnitVerdict::ProbablyViolated: return "probably-violated";
  }
  return "unknown";
}

const char* bound_check_name(BoundCheck b) {
  switch (b) {
    case BoundCheck::Error: return "error";
    case BoundCheck::Warn: return "warn";
    case BoundCheck::Off: return "off";
  }
  return "error";
}

BoundCheck bound_check_from(const std::string& s) {
  if (s == "error") return BoundCheck::Error;
  if (s == "warn") return BoundCheck::Warn;
  if (s == "off") return BoundCheck::Off;
  fail(ErrorCode::Parse, "bound_check must be error, warn or off");
}

}  // namespace

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("invalid JSON: ") + e.what());
  }
}

Json to_json(const Vector& v) { return Json(to_std(v)); }

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

Vector vector_from_json(const Json& j) {
  return guarded("vector", [&] {
    require(j.is_array(), ErrorCode::Parse, "expected a numeric array");
    return to_vector(j.get<std::vector<double>>());
  });
}

Matrix matrix_from_json(const Json& j) {
  return guarded("matrix", [&] {
    require(j.is_array(), ErrorCode::Parse, "expected an array of rows");
    if (j.empty()) return Matrix(0, 0);
    const auto cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto row = j[i].get<std::vector<double>>();
      require(row.size() == cols, ErrorCode::Parse, "matrix rows differ in length");
      for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
    return m;
  });
}

Json to_json(const BetaSet& b) {
  Json j{{"k", b.k()}, {"T0", b.T0()}};
  j["betas"] = Json::array();
  for (const auto& v : b.betas) j["betas"].push_back(to_json(v));
  if (!b.preference_rank.empty()) j["preference_rank"] = b.preference_rank;
  return j;
}

BetaSet beta_set_from_json(const Json& j) {
  return guarded("beta set", [&] {
    reject_unknown(j, {"k", "T0", "betas", "preference_rank"}, "beta set");
    BetaSet b;
    for (const auto& v : j.at("betas")) b.betas.push_back(vector_from_json(v));
    if (j.contains("preference_rank")) b.preference_rank = j.at("preference_rank").get<std::vector<int>>();
    if (j.contains("k")) require(j.at("k").get<int>() == b.k(), ErrorCode::Parse, "k does not match the betas");
    if (j.contains("T0")) require(j.at("T0").get<int>() == b.T0(), ErrorCode::Parse, "T0 does not match the betas");
    b.validate();
    return b;
  });
}

Json to_json(const Region& r) {
  Json out = Json::array();
  for (const auto& h : r.halfspaces) out.push_back({{"a", to_json(h.a)}, {"b", h.b}, {"strict", h.strict}});
  return out;
}

Region region_from_json(const Json& j) {
  return guarded("region", [&] {
    require(j.is_array(), ErrorCode::Parse, "a region is a list of halfspaces");
    Region r;
    for (const auto& h : j) {
      reject_unknown(h, {"a", "b", "strict"}, "halfspace");
      r.halfspaces.push_back({vector_from_json(h.at("a")), h.at("b").get<double>(), h.value("strict", false)});
    }
    r.validate();
    return r;
  });
}

Json to_json(const PanelDataset& d) {
  return {{"k", d.k}, {"y_pre", to_json(d.y_pre)}, {"assigned", d.assigned}, {"y_post", to_json(d.y_post)}};
}

PanelDataset dataset_from_json(const Json& j) {
  return guarded("dataset", [&] {
    reject_unknown(j, {"k", "y_pre", "assigned", "y_post"}, "dataset");
    PanelDataset d;
    d.k = j.at("k").get<int>();
    d.y_pre = matrix_from_json(j.at("y_pre"));
    d.y_post = matrix_from_json(j.at("y_post"));
    d.assigned = j.at("assigned").get<std::vector<int>>();
    require(static_cast<int>(d.assigned.size()) == d.units() && d.y_post.rows() == d.units(), ErrorCode::Parse,
            "dataset rows are inconsistent");
    for (int a : d.assigned) require(a >= 0 && a < d.k, ErrorCode::Parse, "assignment out of range");
    return d;
  });
}

Json to_json(const InterventionPolicy& p, const std::string& donors_path) {
  Json j{{"variant", variant_name(p)}};
  if (auto q = std::get_if<ShiftedTwo>(&p)) {
    j["beta0"] = to_json(q->beta0);
    j["beta1"] = to_json(q->beta1);
    j["delta"] = q->delta;
  } else if (auto q = std::get_if<ShiftedMulti>(&p)) {
    j["betas"] = to_json(q->betas);
    j["delta"] = q->delta;
  } else if (auto q = std::get_if<MinIndexMembership>(&p)) {
    j["delta"] = q->delta;
    if (q->betas) {
      j["betas"] = to_json(*q->betas);
    } else {
      j["centers_by_type"] = Json::array();
      for (const auto& group : q->centers_by_type) {
        Json g = Json::array();
        for (const auto& c : group) g.push_back(to_json(c));
        j["centers_by_type"].push_back(g);
      }
    }
  } else if (auto q = std::get_if<Naive>(&p)) {
    j["betas"] = to_json(q->betas);
  } else {
    const auto& si = std::get<SyntheticInterventions>(p);
    j["rank"] = si.rank;
    j["omega"] = to_json(si.omega);
    if (donors_path.empty()) {
      j["donors"] = to_json(si.donors);
    } else {
      j["donors_path"] = donors_path;
      j["T0"] = si.donors.T0();
      j["k"] = si.donors.k;
    }
  }
  return j;
}

InterventionPolicy policy_from_json(const Json& j, const std::string& base_dir) {
  return guarded("policy", [&]() -> InterventionPolicy {
    require(j.is_object() && j.contains("variant"), ErrorCode::Parse, "policy JSON needs a \"variant\" key");
    const auto variant = j.at("variant").get<std::string>();
    if (variant == "shifted-two") {
      reject_unknown(j, {"variant", "beta0", "beta1", "delta"}, "shifted-two policy");
      ShiftedTwo p{vector_from_json(j.at("beta0")), vector_from_json(j.at("beta1")), j.at("delta").get<double>()};
      require(p.beta0.size() == p.beta1.size(), ErrorCode::Parse, "beta0 and beta1 differ in length");
      require(p.delta >= 0.0, ErrorCode::Parse, "delta must be >= 0");
      return p;
    }
    if (variant == "shifted-multi") {
      reject_unknown(j, {"variant", "betas", "delta"}, "shifted-multi policy");
      ShiftedMulti p{beta_set_from_json(j.at("betas")), j.at("delta").get<double>()};
      require(p.delta >= 0.0, ErrorCode::Parse, "delta must be >= 0");
      return p;
    }
    if (variant == "min-index") {
      reject_unknown(j, {"variant", "betas", "centers_by_type", "delta"}, "min-index policy");
      MinIndexMembership p;
      p.delta = j.at("delta").get<double>();
      require(p.delta > 0.0, ErrorCode::Parse, "min-index policy needs delta > 0");
      if (j.contains("betas")) {
        p.betas = beta_set_from_json(j.at("betas"));
      } else {
        for (const auto& group : j.at("centers_by_type")) {
          std::vector<Vector> centers;
          for (const auto& c : group) centers.push_back(vector_from_json(c));
          p.centers_by_type.push_back(std::move(centers));
        }
        require(p.centers_by_type.size() >= 2, ErrorCode::Parse, "need centers for at least two types");
      }
      return p;
    }
    if (variant == "naive") {
      reject_unknown(j, {"variant", "betas"}, "naive policy");
      return Naive{beta_set_from_json(j.at("betas"))};
    }
    if (variant == "si") {
      reject_unknown(j, {"variant", "rank", "omega", "donors", "donors_path", "T0", "k"}, "si policy");
      PanelDataset donors;
      if (j.contains("donors")) {
        donors = dataset_from_json(j.at("donors"));
      } else {
        std::filesystem::path path = j.at("donors_path").get<std::string>();
        if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
        donors = ingest_csv(path.string(), j.at("T0").get<int>(), j.value("k", 0));
      }
      return make_synthetic_interventions(std::move(donors), vector_from_json(j.at("omega")), j.at("rank").get<int>());
    }
    fail(ErrorCode::Parse, "unknown policy variant '" + variant + "'");
  });
}

Json to_json(const LearnedBetas& l) {
  Json arms = Json::array();
  for (int d = 0; d < l.beta_hats.k(); ++d)
    arms.push_back({{"intervention", d},
                    {"beta_hat", to_json(l.beta_hats[d])},
                    {"singular_values", to_json(l.singular_values[d])},
                    {"snr", l.snr[d]},
                    {"n", l.n[d]},
                    {"rank_used", l.rank_used[d]}});
  return {{"betas", to_json(l.beta_hats)}, {"arms", arms}, {"warnings", l.warnings}};
}

Json to_json(const GapSpec& g) {
  return {{"gamma", to_json(g.gamma)}, {"delta", g.delta},   {"sigma", g.sigma},
          {"beta_bar", g.beta_bar},    {"T0", g.T0},         {"alpha", g.alpha},
          {"estimation_error", to_json(g.estimation_error)}};
}

Json to_json(const ProjectionResult& r) {
  return {{"point", to_json(r.point)},     {"distance", r.distance}, {"kkt_residual", r.kkt_residual},
          {"iterations", r.iterations},    {"feasible", r.feasible}, {"converged", r.converged},
          {"multipliers", to_json(r.multipliers)}};
}

Json to_json(const BestResponseOutcome& o) {
  return {{"y_modified", to_json(o.y_modified)},
          {"achieved", o.achieved},
          {"effort", o.effort},
          {"moved", o.moved},
          {"exact", o.exact}};
}

Json to_json(const SeparationReport& r, bool include_units) {
  Json j{{"verdict", r.satisfied ? "SATISFIED" : "VIOLATED"},
         {"satisfied", r.satisfied},
         {"low_confidence", r.low_confidence},
         {"mode", r.mode == SotMode::Finite ? "finite" : "continuum"},
         {"delta", r.delta},
         {"violations", r.violations()}};
  if (include_units) {
    Json units = Json::array();
    for (const auto& u : r.units) {
      Json e{{"unit", u.unit},
             {"type", u.type},
             {"verdict", verdict_name(u.verdict)},
             {"margin", u.margin},
             {"certificate", u.certificate}};
      if (u.witness.size()) e["witness"] = to_json(u.witness);
      units.push_back(std::move(e));
    }
    j["units"] = std::move(units);
  }
  return j;
}

Json to_json(const LatentFactorSpec& s) {
  Json factors = Json::array();
  for (const auto& U : s.factors) factors.push_back(to_json(U));
  return {{"s", s.s}, {"T0", s.T0}, {"T", s.T}, {"k", s.k}, {"sigma", s.sigma}, {"factors", factors}};
}

LatentFactorSpec spec_from_json(const Json& j) {
  return guarded("spec", [&] {
    reject_unknown(j, {"s", "T0", "T", "k", "sigma", "factors"}, "spec");
    LatentFactorSpec s;
    s.s = j.at("s").get<int>();
    s.T0 = j.at("T0").get<int>();
    s.T = j.at("T").get<int>();
    s.k = j.at("k").get<int>();
    s.sigma = j.value("sigma", 0.0);
    for (const auto& U : j.at("factors")) s.factors.push_back(matrix_from_json(U));
    s.validate();
    return s;
  });
}

Json to_json(const World& w) {
  return {{"spec", to_json(w.spec)},
          {"omega", to_json(w.omega)},
          {"betas", to_json(w.betas)},
          {"train_units", to_json(w.train_units)},
          {"test_units", to_json(w.test_units)},
          {"train_noise_scale", to_json(w.train_noise_scale)},
          {"test_noise_scale", to_json(w.test_noise_scale)}};
}

Json to_json(const ExperimentConfig& c) {
  Json j{{"s", c.s},
         {"T0", c.T0},
         {"T", c.T},
         {"k", c.k},
         {"sigma", c.sigma},
         {"m_train", c.m_train},
         {"m_test", c.m_test},
         {"delta_true", c.delta_true},
         {"delta_hat", c.delta_hat},
         {"pcr", {{"p", c.pcr.p}, {"rho", c.pcr.rho}, {"min_singular_ratio", c.pcr.min_singular_ratio}}},
         {"seed", c.seed},
         {"policy", to_string(c.variant)},
         {"generator", c.generator},
         {"repetitions", c.repetitions},
         {"bound_check", bound_check_name(c.bound_check)}};
  if (c.omega.size()) j["omega"] = to_json(c.omega);
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  return guarded("config", [&] {
    reject_unknown(j,
                   {"s", "T0", "T", "k", "sigma", "m_train", "m_test", "delta_true", "delta_hat", "omega", "pcr", "seed",
                    "policy", "generator", "repetitions", "bound_check"},
                   "config");
    ExperimentConfig c;
    c.s = j.value("s", c.s);
    c.T0 = j.value("T0", c.T0);
    c.T = j.value("T", c.T);
    c.k = j.value("k", c.k);
    c.sigma = j.value("sigma", c.sigma);
    c.m_train = j.value("m_train", c.m_train);
    c.m_test = j.value("m_test", c.m_test);
    c.delta_true = j.value("delta_true", c.delta_true);
    c.delta_hat = j.value("delta_hat", c.delta_hat);
    if (j.contains("omega")) c.omega = vector_from_json(j.at("omega"));
    if (j.contains("pcr")) {
      const auto& p = j.at("pcr");
      reject_unknown(p, {"p", "rho", "min_singular_ratio"}, "pcr");
      c.pcr.p = p.value("p", c.pcr.p);
      c.pcr.rho = p.value("rho", c.pcr.rho);
      c.pcr.min_singular_ratio = p.value("min_singular_ratio", c.pcr.min_singular_ratio);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("policy")) c.variant = parse_variant(j.at("policy").get<std::string>());
    c.generator = j.value("generator", c.generator);
    c.repetitions = j.value("repetitions", c.repetitions);
    if (j.contains("bound_check")) c.bound_check = bound_check_from(j.at("bound_check").get<std::string>());
    c.validate();
    return c;
  });
}

Json to_json(const Metrics& m, bool include_records) {
  Json j{{"normalized_delta_revenue", m.normalized_delta_revenue},
         {"mean_squared_regret", m.mean_squared_regret},
         {"mean_regret", m.mean_regret},
         {"misassignment_rate", m.misassignment_rate},
         {"units", m.units},
         {"evaluated_units", m.evaluated_units},
         {"equivalence_checked", m.equivalence_checked},
         {"equivalence_mismatches", m.equivalence_mismatches},
         {"bound_violations", m.bound_violations},
         {"warnings", m.warnings}};
  if (std::isnan(m.normalized_delta_revenue)) j["normalized_delta_revenue"] = nullptr;
  if (include_records) {
    Json recs = Json::array();
    for (const auto& r : m.records)
      recs.push_back({{"unit", r.unit},
                      {"type", r.type},
                      {"assigned", r.assigned},
                      {"truthful", r.truthful},
                      {"moved", r.moved},
                      {"effort", r.effort},
                      {"regret", r.regret},
                      {"bound", std::isfinite(r.bound) ? Json(r.bound) : Json(nullptr)},
                      {"bound_holds", r.bound_holds},
                      {"boundary", r.boundary}});
    j["records"] = std::move(recs);
  }
  return j;
}

Json to_json(const std::vector<SweepRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"ratio", r.ratio},
                   {"mean_ndr", std::isnan(r.mean_ndr) ? Json(nullptr) : Json(r.mean_ndr)},
                   {"std_ndr", std::isnan(r.std_ndr) ? Json(nullptr) : Json(r.std_ndr)},
                   {"mean_regret", r.mean_regret},
                   {"misassignment", r.misassignment},
                   {"ndr_values", r.ndr_values}});
  return out;
}

Json to_json(const ImpossibilityReport& r) {
  Json top{{"unit", to_json(r.top_unit)},
           {"finite_verdict", verdict_name(r.top_finite.verdict)},
           {"finite_certificate", r.top_finite.certificate},
           {"finite_margin", r.top_finite.margin},
           {"distance_to_region", r.top_distance_to_region},
           {"achieved", r.top_achieved},
           {"blocked", r.top_blocked}};
  return {{"alpha", r.alpha},
          {"zeta", r.zeta},
          {"delta", r.delta},
          {"lhs", r.lhs},
          {"rhs", r.rhs},
          {"verdict", r.verdict},
          {"betas", to_json(r.betas)},
          {"sampled_type0", r.sampled_type0},
          {"sampled_type1", r.sampled_type1},
          {"finite_separation", r.finite_satisfied ? "SATISFIED" : "VIOLATED"},
          {"continuum_separation", r.continuum_satisfied ? "SATISFIED" : "VIOLATED"},
          {"top_unit", top},
          {"lower_reaching_top", r.lower_reaching_top},
          {"lower_blocked", r.lower_blocked},
          {"min_lower_distance_to_cone", r.min_lower_distance_to_cone}};
}

Json to_json(const SiFailureReport& r) {
  return {{"center_distance", r.center_distance},
          {"test_units", r.test_units},
          {"type0_units", r.type0_units},
          {"si_misassignment", r.si_misassignment},
          {"alg1_misassignment", r.alg1_misassignment},
          {"si_type0_misassignment", r.si_type0_misassignment},
          {"alg1_type0_misassignment", r.alg1_type0_misassignment}};
}

Json to_json(const GapNecessityReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"n", row.n},
                    {"threshold_minus", row.threshold_minus},
                    {"threshold_plus", row.threshold_plus},
                    {"target_minus", row.target_minus},
                    {"target_plus", row.target_plus},
                    {"effort_minus", row.effort_minus},
                    {"effort_plus", row.effort_plus},
                    {"flips", row.flips},
                    {"expected_flip", row.expected_flip}});
  return {{"theta1", r.theta1}, {"theta2", r.theta2}, {"c", r.c},
          {"alpha_small", r.alpha_small}, {"delta", r.delta}, {"unit", r.unit},
          {"rows", rows}, {"matches_case_analysis", r.matches_case_analysis}};
}

}  // namespace strategio
