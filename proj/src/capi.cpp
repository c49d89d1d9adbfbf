#include "strategio.h"

#include "strategio/harness.hpp"
#include "strategio/panel_io.hpp"
#include "strategio/serialization.hpp"

#include <cstring>
#include <new>
#include <string>

using namespace strategio;

struct sp_policy {
  InterventionPolicy policy;
};

struct sp_dataset {
  PanelDataset data;
};

namespace {

thread_local std::string last_error;

sp_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return SP_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return SP_ERR_DIMENSION_MISMATCH;
    case ErrorCode::RankDeficient: return SP_ERR_RANK_DEFICIENT;
    case ErrorCode::Infeasible: return SP_ERR_INFEASIBLE;
    case ErrorCode::NotConverged: return SP_ERR_NOT_CONVERGED;
    case ErrorCode::Parse: return SP_ERR_PARSE;
    case ErrorCode::Io: return SP_ERR_IO;
    case ErrorCode::Unsupported: return SP_ERR_UNSUPPORTED;
    case ErrorCode::BoundViolation: return SP_ERR_BOUND_VIOLATION;
    case ErrorCode::Degenerate: return SP_ERR_DEGENERATE;
  }
  return SP_ERR_INTERNAL;
}

template <class F>
sp_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return SP_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SP_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return SP_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  require(p != nullptr, ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Vector view(const double* y, size_t n) {
  need(y, "y");
  return Eigen::Map<const Vector>(y, static_cast<Eigen::Index>(n));
}

ExperimentConfig parse_config(const char* json) {
  need(json, "config_json");
  return config_from_json(parse_json(json));
}

}  // namespace

extern "C" {

const char* sp_version(void) { return "0.1.0"; }

const char* sp_status_string(sp_status status) {
  switch (status) {
    case SP_OK: return "ok";
    case SP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SP_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case SP_ERR_RANK_DEFICIENT: return "rank deficient";
    case SP_ERR_INFEASIBLE: return "infeasible";
    case SP_ERR_NOT_CONVERGED: return "not converged";
    case SP_ERR_PARSE: return "parse error";
    case SP_ERR_IO: return "i/o error";
    case SP_ERR_UNSUPPORTED: return "unsupported";
    case SP_ERR_BOUND_VIOLATION: return "bound violation";
    case SP_ERR_DEGENERATE: return "degenerate";
    case SP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sp_last_error(void) { return last_error.c_str(); }

void sp_string_free(char* s) { std::free(s); }

sp_status sp_policy_from_json(const char* json, const char* base_dir, sp_policy** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    auto policy = policy_from_json(parse_json(json), base_dir ? base_dir : "");
    *out = new sp_policy{std::move(policy)};
  });
}

sp_status sp_policy_to_json(const sp_policy* policy, char** json_out) {
  return guard([&] {
    need(policy, "policy");
    need(json_out, "json_out");
    *json_out = dup_string(to_json(policy->policy).dump(2));
  });
}

void sp_policy_free(sp_policy* policy) { delete policy; }

sp_status sp_policy_k(const sp_policy* policy, int* k) {
  return guard([&] {
    need(policy, "policy");
    need(k, "k");
    *k = policy_k(policy->policy);
  });
}

sp_status sp_policy_dim(const sp_policy* policy, int* dim) {
  return guard([&] {
    need(policy, "policy");
    need(dim, "dim");
    *dim = policy_dim(policy->policy);
  });
}

sp_status sp_policy_assign(const sp_policy* policy, const double* y, size_t n, int* intervention) {
  return guard([&] {
    need(policy, "policy");
    need(intervention, "intervention");
    *intervention = assign(policy->policy, view(y, n));
  });
}

sp_status sp_policy_best_response(const sp_policy* policy, const double* y, size_t n, double delta, double* y_out,
                                  sp_best_response_info* info) {
  return guard([&] {
    need(policy, "policy");
    need(y_out, "y_out");
    need(info, "info");
    const auto br = best_response(policy->policy, view(y, n), delta);
    std::memcpy(y_out, br.y_modified.data(), n * sizeof(double));
    info->achieved = br.achieved;
    info->moved = br.moved;
    info->exact = br.exact;
    info->effort = br.effort;
  });
}

sp_status sp_policy_region_json(const sp_policy* policy, int d, char** json_out) {
  return guard([&] {
    need(policy, "policy");
    need(json_out, "json_out");
    *json_out = dup_string(to_json(region(policy->policy, d)).dump(2));
  });
}

sp_status sp_dataset_read_csv(const char* path, int T0, int k, sp_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new sp_dataset{ingest_csv(path, T0, k)};
  });
}

sp_status sp_dataset_write_csv(const sp_dataset* data, const char* path) {
  return guard([&] {
    need(data, "data");
    need(path, "path");
    write_csv(data->data, path);
  });
}

sp_status sp_dataset_shape(const sp_dataset* data, int* units, int* T0, int* post_length, int* k) {
  return guard([&] {
    need(data, "data");
    if (units) *units = data->data.units();
    if (T0) *T0 = data->data.T0();
    if (post_length) *post_length = data->data.post_length();
    if (k) *k = data->data.k;
  });
}

sp_status sp_dataset_pre_period(const sp_dataset* data, double* out, size_t capacity) {
  return guard([&] {
    need(data, "data");
    need(out, "out");
    const auto& y = data->data.y_pre;
    require(capacity >= static_cast<size_t>(y.size()), ErrorCode::DimensionMismatch, "output buffer too small");
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, y.rows(), y.cols()) = y;
  });
}

void sp_dataset_free(sp_dataset* data) { delete data; }

sp_status sp_generate(const char* config_json, sp_dataset** train_out, char** truth_json_out) {
  return guard([&] {
    need(train_out, "train_out");
    *train_out = nullptr;
    const auto config = parse_config(config_json);
    const World world = make_world(config);
    std::vector<std::string> warnings;
    auto data = generate_training(config, world, &warnings);
    if (truth_json_out) {
      Json truth = to_json(world);
      truth["config"] = to_json(config);
      truth["warnings"] = warnings;
      *truth_json_out = dup_string(truth.dump(2));
    }
    *train_out = new sp_dataset{std::move(data)};
  });
}

sp_status sp_learn(const sp_dataset* data, const char* options_json, sp_policy** policy_out,
                   char** diagnostics_json_out) {
  return guard([&] {
    need(data, "data");
    need(policy_out, "policy_out");
    *policy_out = nullptr;
    const Json opts = options_json ? parse_json(options_json) : Json::object();
    require(opts.is_object(), ErrorCode::Parse, "learn options must be a JSON object");
    const auto variant = parse_variant(opts.value("policy", std::string(data->data.k == 2 ? "shifted-two" : "shifted-multi")));
    const double delta = opts.value("delta", 0.0);
    const Vector omega = opts.contains("omega") ? vector_from_json(opts.at("omega"))
                                                : Vector(Vector::Ones(data->data.post_length()));
    PCRConfig pcr;
    if (opts.contains("pcr")) {
      const auto& p = opts.at("pcr");
      pcr.p = p.value("p", pcr.p);
      pcr.rho = p.value("rho", pcr.rho);
      pcr.min_singular_ratio = p.value("min_singular_ratio", pcr.min_singular_ratio);
    }
    std::optional<LearnedBetas> learned;
    auto policy = learn_variant(variant, data->data, omega, delta, pcr, &learned);
    if (diagnostics_json_out)
      *diagnostics_json_out = dup_string((learned ? to_json(*learned) : Json::object()).dump(2));
    *policy_out = new sp_policy{std::move(policy)};
  });
}

sp_status sp_run_experiment(const char* config_json, int include_records, char** metrics_json_out) {
  return guard([&] {
    need(metrics_json_out, "metrics_json_out");
    const auto run = run_experiment_detailed(parse_config(config_json));
    Json j = to_json(run.metrics, include_records != 0);
    j["policy"] = to_json(run.policy);
    if (run.learned) j["learned"] = to_json(*run.learned);
    *metrics_json_out = dup_string(j.dump(2));
  });
}

sp_status sp_evaluate_policy(const char* config_json, const sp_policy* policy, int include_records,
                             char** metrics_json_out) {
  return guard([&] {
    need(policy, "policy");
    need(metrics_json_out, "metrics_json_out");
    const auto config = parse_config(config_json);
    const auto world = make_world(config);
    *metrics_json_out = dup_string(to_json(evaluate_policy(config, world, policy->policy), include_records != 0).dump(2));
  });
}

sp_status sp_delta_sweep(const char* config_json, const double* ratios, size_t n_ratios, int jobs, char** csv_out,
                         char** json_out) {
  return guard([&] {
    need(ratios, "ratios");
    const auto rows = delta_sweep(parse_config(config_json), std::vector<double>(ratios, ratios + n_ratios), jobs);
    if (csv_out) *csv_out = dup_string(sweep_csv(rows));
    if (json_out) *json_out = dup_string(to_json(rows).dump(2));
  });
}

sp_status sp_check_sot(const char* request_json, char** report_json_out) {
  return guard([&] {
    need(request_json, "request_json");
    need(report_json_out, "report_json_out");
    const Json req = parse_json(request_json);
    require(req.is_object(), ErrorCode::Parse, "request must be a JSON object");
    std::vector<TypedUnit> units;
    for (const auto& u : req.at("units")) units.push_back({vector_from_json(u.at("y")), u.at("type").get<int>()});
    const double delta = req.at("delta").get<double>();
    const std::string mode = req.value("mode", std::string("finite"));
    SeparationReport report;
    if (mode == "continuum") {
      report = separation_of_types_continuum(units, beta_set_from_json(req.at("betas")), delta);
    } else {
      require(mode == "finite", ErrorCode::InvalidArgument, "mode must be finite or continuum");
      SeparationOptions options;
      if (req.contains("preference_rank")) options.preference_rank = req.at("preference_rank").get<std::vector<int>>();
      if (req.contains("seed")) options.seed = req.at("seed").get<std::uint64_t>();
      report = separation_of_types(units, delta, options);
    }
    *report_json_out = dup_string(to_json(report).dump(2));
  });
}

sp_status sp_demo_impossible(double alpha, double zeta, double delta, char** report_json_out) {
  return guard([&] {
    need(report_json_out, "report_json_out");
    *report_json_out = dup_string(to_json(demo_impossible(alpha, zeta, delta)).dump(2));
  });
}

sp_status sp_demo_si_failure(const char* config_json, char** report_json_out) {
  return guard([&] {
    need(report_json_out, "report_json_out");
    SiFailureConfig c;
    if (config_json) {
      const Json j = parse_json(config_json);
      c.delta = j.value("delta", c.delta);
      c.gap_factor = j.value("gap_factor", c.gap_factor);
      c.sigma = j.value("sigma", c.sigma);
      c.m_train = j.value("m_train", c.m_train);
      c.m_test = j.value("m_test", c.m_test);
      c.seed = j.value("seed", c.seed);
      c.rank = j.value("rank", c.rank);
    }
    *report_json_out = dup_string(to_json(demo_si_failure(c)).dump(2));
  });
}

sp_status sp_demo_gap_necessity(double theta1, double theta2, double c, double alpha_small, double delta,
                                const int* n_values, size_t count, char** report_json_out) {
  return guard([&] {
    need(n_values, "n_values");
    need(report_json_out, "report_json_out");
    const auto rep = demo_gap_necessity(theta1, theta2, c, alpha_small, delta, std::vector<int>(n_values, n_values + count));
    *report_json_out = dup_string(to_json(rep).dump(2));
  });
}

}  // extern "C"
