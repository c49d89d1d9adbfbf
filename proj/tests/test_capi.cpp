#include "strategio.h"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using Json = nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  sp_string_free(s);
  return out;
}

const char* kConfig = R"({"s": 2, "T0": 4, "T": 6, "k": 2, "sigma": 0.0, "m_train": 60, "m_test": 40,
                          "delta_true": 0.1, "delta_hat": 0.1, "seed": 5})";

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::string(sp_version()) == "0.1.0");
  CHECK(std::string(sp_status_string(SP_OK)) == "ok");
  CHECK(std::string(sp_status_string(SP_ERR_PARSE)).size() > 0);
  sp_string_free(nullptr);
}

TEST_CASE("policy handles") {
  const char* json = R"({"variant": "shifted-two", "beta0": [0, 0], "beta1": [2, 0], "delta": 1.0})";
  sp_policy* p = nullptr;
  REQUIRE(sp_policy_from_json(json, nullptr, &p) == SP_OK);
  int k = 0, dim = 0, d = -1;
  CHECK(sp_policy_k(p, &k) == SP_OK);
  CHECK(sp_policy_dim(p, &dim) == SP_OK);
  CHECK(k == 2);
  CHECK(dim == 2);

  const double inside[2] = {1.001, 5}, boundary[2] = {1, 5};
  CHECK(sp_policy_assign(p, inside, 2, &d) == SP_OK);
  CHECK(d == 1);
  CHECK(sp_policy_assign(p, boundary, 2, &d) == SP_OK);
  CHECK(d == 0);

  const double y[2] = {0.2, 0};
  double moved[2];
  sp_best_response_info info{};
  CHECK(sp_policy_best_response(p, y, 2, 1.0, moved, &info) == SP_OK);
  CHECK(info.achieved == 1);
  CHECK(info.moved == 1);
  CHECK(info.effort == doctest::Approx(0.8).epsilon(1e-8));
  CHECK(moved[0] > 1.0);

  char* region = nullptr;
  CHECK(sp_policy_region_json(p, 1, &region) == SP_OK);
  const Json r = Json::parse(take(region));
  CHECK(r[0]["strict"] == true);

  char* back = nullptr;
  CHECK(sp_policy_to_json(p, &back) == SP_OK);
  CHECK(Json::parse(take(back))["variant"] == "shifted-two");

  CHECK(sp_policy_assign(p, y, 3, &d) == SP_ERR_DIMENSION_MISMATCH);
  CHECK(std::string(sp_last_error()).size() > 0);
  sp_policy_free(p);
  sp_policy_free(nullptr);
}

TEST_CASE("errors map to status codes") {
  sp_policy* p = nullptr;
  CHECK(sp_policy_from_json("{not json", nullptr, &p) == SP_ERR_PARSE);
  CHECK(p == nullptr);
  CHECK(sp_policy_from_json(R"({"variant": "oracle"})", nullptr, &p) != SP_OK);
  CHECK(sp_policy_from_json(nullptr, nullptr, &p) == SP_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sp_last_error()).find("NULL") != std::string::npos);

  const char* mi = R"({"variant": "min-index", "delta": 1.0, "betas": {"betas": [[-1, 0.5], [1, 0.5], [0, 1]]}})";
  REQUIRE(sp_policy_from_json(mi, nullptr, &p) == SP_OK);
  char* region = nullptr;
  CHECK(sp_policy_region_json(p, 0, &region) == SP_ERR_UNSUPPORTED);
  sp_policy_free(p);

  sp_dataset* data = nullptr;
  CHECK(sp_dataset_read_csv("/nonexistent/x.csv", 2, 0, &data) == SP_ERR_IO);
}

TEST_CASE("generate, write, read and learn") {
  sp_dataset* data = nullptr;
  char* truth = nullptr;
  REQUIRE(sp_generate(kConfig, &data, &truth) == SP_OK);
  const Json t = Json::parse(take(truth));
  CHECK(t.contains("spec"));
  CHECK(t.contains("betas"));

  int units = 0, T0 = 0, post = 0, k = 0;
  CHECK(sp_dataset_shape(data, &units, &T0, &post, &k) == SP_OK);
  CHECK(units == 60);
  CHECK(T0 == 4);
  CHECK(post == 2);
  CHECK(k == 2);

  std::vector<double> pre(static_cast<std::size_t>(units * T0));
  CHECK(sp_dataset_pre_period(data, pre.data(), pre.size() - 1) == SP_ERR_DIMENSION_MISMATCH);
  CHECK(sp_dataset_pre_period(data, pre.data(), pre.size()) == SP_OK);

  REQUIRE(sp_dataset_write_csv(data, "capi_train.csv") == SP_OK);
  sp_dataset* again = nullptr;
  REQUIRE(sp_dataset_read_csv("capi_train.csv", 4, 0, &again) == SP_OK);
  std::vector<double> pre2(pre.size());
  CHECK(sp_dataset_pre_period(again, pre2.data(), pre2.size()) == SP_OK);
  CHECK(pre == pre2);

  sp_policy* policy = nullptr;
  char* diag = nullptr;
  REQUIRE(sp_learn(again, R"({"delta": 0.1, "pcr": {"p": 2}})", &policy, &diag) == SP_OK);
  const Json dj = Json::parse(take(diag));
  CHECK(dj["arms"][0]["rank_used"] == 2);

  int d = 0;
  CHECK(sp_policy_assign(policy, pre.data(), 4, &d) == SP_OK);

  char* metrics = nullptr;
  REQUIRE(sp_evaluate_policy(kConfig, policy, 0, &metrics) == SP_OK);
  const Json m = Json::parse(take(metrics));
  CHECK(m["misassignment_rate"].get<double>() == 0.0);

  sp_policy_free(policy);
  sp_dataset_free(data);
  sp_dataset_free(again);
  std::remove("capi_train.csv");
}

TEST_CASE("experiments and sweeps") {
  char* metrics = nullptr;
  REQUIRE(sp_run_experiment(kConfig, 1, &metrics) == SP_OK);
  const Json m = Json::parse(take(metrics));
  CHECK(m["normalized_delta_revenue"].get<double>() == doctest::Approx(1.0));
  CHECK(m["records"].size() == 40);

  const double ratios[3] = {0, 1, 2};
  char* csv = nullptr;
  char* json = nullptr;
  Json config = Json::parse(kConfig);
  config["repetitions"] = 2;
  REQUIRE(sp_delta_sweep(config.dump().c_str(), ratios, 3, 2, &csv, &json) == SP_OK);
  const std::string table = take(csv);
  CHECK(table.rfind("ratio,mean_ndr,std_ndr,mean_regret,misassignment", 0) == 0);
  CHECK(Json::parse(take(json)).size() == 3);

  CHECK(sp_run_experiment(R"({"delta_true": -1})", 0, &metrics) == SP_ERR_INVALID_ARGUMENT);
  CHECK(sp_run_experiment(R"({"unknown_key": 1})", 0, &metrics) == SP_ERR_PARSE);
}

TEST_CASE("separation and demos") {
  const char* req = R"({"mode": "continuum", "delta": 1.0,
                        "betas": {"betas": [[-1, 0.5], [1, 0.5], [0, 1]]},
                        "units": [{"y": [0, 0.01], "type": 2}]})";
  char* report = nullptr;
  REQUIRE(sp_check_sot(req, &report) == SP_OK);
  CHECK(Json::parse(take(report))["verdict"] == "VIOLATED");

  REQUIRE(sp_demo_impossible(0.01, 0.01, 1.0, &report) == SP_OK);
  CHECK(Json::parse(take(report))["verdict"] == "VIOLATED-SoT");

  REQUIRE(sp_demo_si_failure(R"({"sigma": 0.0, "m_test": 100})", &report) == SP_OK);
  CHECK(Json::parse(take(report))["alg1_misassignment"].get<double>() == 0.0);

  const int ns[2] = {10, 200};
  REQUIRE(sp_demo_gap_necessity(0.0, 1.5, 1.0, 0.01, 1.0, ns, 2, &report) == SP_OK);
  CHECK(Json::parse(take(report))["matches_case_analysis"] == true);
}
