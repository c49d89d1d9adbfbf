#include "strategio.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

// Exit codes: 1 for usage and validation problems, 2 for runtime and solver failures.
struct Failure {
  int code;
  std::string message;
};

int exit_code(sp_status s) {
  switch (s) {
    case SP_ERR_INVALID_ARGUMENT:
    case SP_ERR_DIMENSION_MISMATCH:
    case SP_ERR_PARSE:
    case SP_ERR_IO:
    case SP_ERR_BOUND_VIOLATION:
      return 1;
    default:
      return 2;
  }
}

void check(sp_status s, const std::string& what) {
  if (s != SP_OK) throw Failure{exit_code(s), what + ": " + sp_status_string(s) + ": " + sp_last_error()};
}

[[noreturn]] void invalid(const std::string& msg) { throw Failure{1, msg}; }

struct StringFree {
  void operator()(char* s) const { sp_string_free(s); }
};
struct PolicyFree {
  void operator()(sp_policy* p) const { sp_policy_free(p); }
};
struct DatasetFree {
  void operator()(sp_dataset* d) const { sp_dataset_free(d); }
};
using CString = std::unique_ptr<char, StringFree>;
using Policy = std::unique_ptr<sp_policy, PolicyFree>;
using Dataset = std::unique_ptr<sp_dataset, DatasetFree>;

std::string take(char* s) {
  CString owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) invalid("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    invalid(path + ": " + e.what());
  }
}

void write_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{2, "cannot write " + tmp.string()};
    out << contents;
    if (!out.flush()) throw Failure{2, "write failed for " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Failure{2, "cannot rename into " + path.string() + ": " + ec.message()};
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') invalid(std::string("invalid number in ") + what + ": '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) invalid(std::string(what) + " is empty");
  return out;
}

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
};

class Run {
 public:
  Run(std::string command, const Common& common) : command_(std::move(command)), common_(common) {}

  fs::path out(const std::string& name) const { return fs::path(common_.out) / name; }

  void emit(const std::string& name, const std::string& contents) {
    write_atomic(out(name), contents);
    outputs_.push_back(name);
  }
  void record_external(const std::string& name) { outputs_.push_back(name); }

  void finish(const Json& config, std::optional<std::uint64_t> seed) {
    Json manifest{{"command", command_},
                  {"version", sp_version()},
                  {"config_hash", hex(fnv1a(config.dump()))},
                  {"outputs", outputs_}};
    manifest["seed"] = seed ? Json(*seed) : Json(nullptr);
    manifest["config"] = config;
    write_atomic(out(command_ + ".manifest.json"), manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  const Common& common_;
  std::vector<std::string> outputs_;
};

// Config-file-first: flags override the matching JSON keys; the seed falls
// back to STRATEGIO_SEED when neither the flag nor the file sets it.
Json load_config(const Common& c, bool required) {
  Json cfg = Json::object();
  if (!c.config.empty())
    cfg = read_json(c.config);
  else if (required)
    invalid("--config is required");
  if (!cfg.is_object()) invalid("config must be a JSON object");
  if (c.seed) {
    cfg["seed"] = *c.seed;
  } else if (!cfg.contains("seed")) {
    if (const char* env = std::getenv("STRATEGIO_SEED")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (*env == '\0' || *end != '\0') invalid("STRATEGIO_SEED must be an unsigned integer");
      cfg["seed"] = v;
    }
  }
  return cfg;
}

std::optional<std::uint64_t> seed_of(const Json& cfg) {
  if (cfg.contains("seed") && cfg["seed"].is_number_unsigned()) return cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("seed") && cfg["seed"].is_number_integer()) return static_cast<std::uint64_t>(cfg["seed"].get<long long>());
  return std::nullopt;
}

Policy load_policy(const std::string& path) {
  sp_policy* p = nullptr;
  const std::string base = fs::path(path).parent_path().string();
  check(sp_policy_from_json(read_text(path).c_str(), base.c_str(), &p), "loading policy " + path);
  return Policy(p);
}

Dataset load_dataset(const std::string& path, int T0, int k) {
  if (T0 <= 0) invalid("--T0 (or a config with T0) is required to read " + path);
  sp_dataset* d = nullptr;
  check(sp_dataset_read_csv(path.c_str(), T0, k, &d), "reading " + path);
  return Dataset(d);
}

std::vector<std::vector<double>> reports(const std::string& data, const std::string& y, int T0) {
  std::vector<std::vector<double>> rows;
  if (!y.empty()) {
    rows.push_back(parse_list(y, "--y"));
    return rows;
  }
  if (data.empty()) invalid("give --y or --data");
  auto ds = load_dataset(data, T0, 0);
  int units = 0, t0 = 0;
  check(sp_dataset_shape(ds.get(), &units, &t0, nullptr, nullptr), "dataset shape");
  std::vector<double> flat(static_cast<std::size_t>(units) * static_cast<std::size_t>(t0));
  check(sp_dataset_pre_period(ds.get(), flat.data(), flat.size()), "dataset pre-period");
  for (int i = 0; i < units; ++i)
    rows.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i) * t0,
                      flat.begin() + static_cast<std::ptrdiff_t>(i + 1) * t0);
  return rows;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategyproof intervention assignment on panel data"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* sub, bool with_config = true) {
    if (with_config) sub->add_option("--config", common.config, "Config JSON file");
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--seed", seed_value, "Seed override")->each([&](const std::string&) { common.seed = 0; });
    sub->add_flag("-v,--verbose", common.verbosity, "More output");
  };

  auto* gen = app.add_subcommand("generate", "Generate an RCT training panel and its ground truth");
  add_common(gen);

  auto* learn = app.add_subcommand("learn", "Learn a policy from a panel CSV");
  add_common(learn);
  std::string data_path, policy_name, y_text, policy_file;
  int T0 = 0, k = 0, rank = 0;
  std::optional<double> delta_hat;
  learn->add_option("--data", data_path, "Panel CSV")->required();
  learn->add_option("--T0", T0, "Pre-period length");
  learn->add_option("--k", k, "Number of interventions (default: inferred)");
  learn->add_option("--policy", policy_name, "shifted-two|shifted-multi|min-index|naive|si");
  learn->add_option("--delta-hat", delta_hat, "Effort budget assumed by the policy");
  learn->add_option("--rank", rank, "PCR rank (default: config pcr.p, else spectral gap)");

  auto* assign_cmd = app.add_subcommand("assign", "Assign interventions to reports");
  add_common(assign_cmd);
  assign_cmd->add_option("--policy-file", policy_file, "Policy JSON")->required();
  assign_cmd->add_option("--data", data_path, "Panel CSV whose pre-periods are the reports");
  assign_cmd->add_option("--T0", T0, "Pre-period length of --data");
  assign_cmd->add_option("--y", y_text, "One report, comma separated");

  auto* br_cmd = app.add_subcommand("best-response", "Simulate unit best responses");
  add_common(br_cmd);
  std::optional<double> delta;
  br_cmd->add_option("--policy-file", policy_file, "Policy JSON")->required();
  br_cmd->add_option("--data", data_path, "Panel CSV whose pre-periods are the reports");
  br_cmd->add_option("--T0", T0, "Pre-period length of --data");
  br_cmd->add_option("--y", y_text, "One report, comma separated");
  br_cmd->add_option("--delta", delta, "Unit effort budget (default: config delta_true)");

  auto* sot = app.add_subcommand("check-sot", "Check separation of types");
  add_common(sot);
  std::string mode;
  sot->add_option("--mode", mode, "finite|continuum (overrides the request)");
  sot->add_option("--delta", delta, "Effort budget (overrides the request)");

  auto* sweep = app.add_subcommand("sweep", "Sweep delta_hat / delta_true");
  add_common(sweep);
  std::string ratios_text = "0,0.2,0.5,1,2,5";
  int jobs = 0;
  sweep->add_option("--ratios", ratios_text, "Comma-separated ratios");
  sweep->add_option("--jobs", jobs, "Worker threads (default: all cores)");

  auto* eval = app.add_subcommand("evaluate", "Run one experiment and report metrics");
  add_common(eval);
  bool records = false;
  eval->add_option("--policy-file", policy_file, "Score this policy instead of learning one");
  eval->add_option("--policy", policy_name, "Policy variant to learn");
  eval->add_option("--delta-hat", delta_hat, "Effort budget assumed by the policy");
  eval->add_flag("--records", records, "Include per-unit records");

  auto* demo = app.add_subcommand("demo", "Reproduce a constructed example");
  demo->require_subcommand(1);
  auto* demo_imp = demo->add_subcommand("impossible", "Three-intervention impossibility");
  add_common(demo_imp, false);
  double alpha = 0.01, zeta = 0.01, demo_delta = 1.0;
  demo_imp->add_option("--alpha", alpha);
  demo_imp->add_option("--zeta", zeta);
  demo_imp->add_option("--delta", demo_delta);

  auto* demo_si = demo->add_subcommand("si-failure", "Synthetic interventions under strategic units");
  add_common(demo_si);
  double gap_factor = 0.5, sigma = 0.02;
  int m_train = 200, m_test = 500;
  demo_si->add_option("--delta", demo_delta);
  demo_si->add_option("--gap-factor", gap_factor, "Center distance in units of delta");
  demo_si->add_option("--sigma", sigma);
  demo_si->add_option("--m-train", m_train);
  demo_si->add_option("--m-test", m_test);
  demo_si->add_option("--rank", rank);

  auto* demo_gap = demo->add_subcommand("gap-necessity", "Discontinuous best response without a reward gap");
  add_common(demo_gap, false);
  double theta1 = 0.0, theta2 = 1.5, c = 1.0, alpha_small = 0.01;
  std::string n_text = "10,50,99,101,200";
  demo_gap->add_option("--theta1", theta1);
  demo_gap->add_option("--theta2", theta2);
  demo_gap->add_option("--c", c);
  demo_gap->add_option("--alpha-small", alpha_small);
  demo_gap->add_option("--delta", demo_delta);
  demo_gap->add_option("--n-values", n_text);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  if (common.seed) common.seed = seed_value;

  try {
    if (*gen) {
      Run run("generate", common);
      const Json cfg = load_config(common, true);
      sp_dataset* d = nullptr;
      char* truth = nullptr;
      check(sp_generate(cfg.dump().c_str(), &d, &truth), "generate");
      Dataset data(d);
      const std::string truth_text = take(truth);
      fs::create_directories(common.out);
      check(sp_dataset_write_csv(data.get(), run.out("train.csv").c_str()), "writing train.csv");
      run.record_external("train.csv");
      run.emit("truth.json", truth_text + "\n");
      run.finish(cfg, seed_of(cfg));
      int units = 0, t0 = 0, post = 0, kk = 0;
      check(sp_dataset_shape(data.get(), &units, &t0, &post, &kk), "dataset shape");
      std::cout << "generated " << units << " units (T0=" << t0 << ", post=" << post << ", k=" << kk << ") -> "
                << run.out("train.csv").string() << "\n";
    } else if (*learn) {
      Run run("learn", common);
      Json cfg = load_config(common, false);
      if (T0 <= 0) T0 = cfg.value("T0", 0);
      if (k <= 0) k = cfg.value("k", 0);
      auto data = load_dataset(data_path, T0, k);
      int kk = 0;
      check(sp_dataset_shape(data.get(), nullptr, nullptr, nullptr, &kk), "dataset shape");
      Json opts{{"policy", policy_name.empty() ? cfg.value("policy", std::string(kk == 2 ? "shifted-two" : "shifted-multi"))
                                               : policy_name},
                {"delta", delta_hat ? *delta_hat : cfg.value("delta_hat", 0.0)}};
      if (cfg.contains("omega")) opts["omega"] = cfg["omega"];
      Json pcr = cfg.value("pcr", Json::object());
      if (rank > 0) pcr["p"] = rank;
      if (!pcr.contains("p") && cfg.contains("s")) pcr["p"] = cfg["s"];
      opts["pcr"] = pcr;
      sp_policy* p = nullptr;
      char* diag = nullptr;
      check(sp_learn(data.get(), opts.dump().c_str(), &p, &diag), "learn");
      Policy policy(p);
      const std::string diagnostics = take(diag);
      char* pj = nullptr;
      check(sp_policy_to_json(policy.get(), &pj), "serializing policy");
      run.emit("policy.json", take(pj) + "\n");
      run.emit("learned.json", diagnostics + "\n");
      Json manifest_cfg = opts;
      manifest_cfg["data"] = data_path;
      manifest_cfg["T0"] = T0;
      run.finish(manifest_cfg, seed_of(cfg));
      std::cout << "learned " << opts["policy"].get<std::string>() << " policy -> " << run.out("policy.json").string()
                << "\n";
      if (common.verbosity > 0) std::cout << diagnostics << "\n";
    } else if (*assign_cmd || *br_cmd) {
      const bool br = br_cmd->parsed();
      Run run(br ? "best-response" : "assign", common);
      Json cfg = load_config(common, false);
      if (T0 <= 0) T0 = cfg.value("T0", 0);
      auto policy = load_policy(policy_file);
      const auto ys = reports(data_path, y_text, T0);
      double budget = 0.0;
      if (br) {
        if (delta)
          budget = *delta;
        else if (cfg.contains("delta_true"))
          budget = cfg["delta_true"].get<double>();
        else
          invalid("--delta (or a config with delta_true) is required");
      }
      std::string csv = br ? "unit_id,achieved,moved,effort,exact" : "unit_id,assigned_intervention";
      if (br)
        for (std::size_t t = 0; t < (ys.empty() ? 0 : ys[0].size()); ++t) csv += ",y_modified_" + std::to_string(t + 1);
      csv += "\n";
      Json single;
      for (std::size_t i = 0; i < ys.size(); ++i) {
        const auto& y = ys[i];
        if (br) {
          std::vector<double> moved(y.size());
          sp_best_response_info info{};
          check(sp_policy_best_response(policy.get(), y.data(), y.size(), budget, moved.data(), &info),
                "best response of unit " + std::to_string(i));
          csv += std::to_string(i) + ',' + std::to_string(info.achieved) + ',' + std::to_string(info.moved) + ',' +
                 fmt(info.effort) + ',' + std::to_string(info.exact);
          for (double v : moved) csv += ',' + fmt(v);
          single = {{"achieved", info.achieved}, {"moved", info.moved != 0}, {"effort", info.effort},
                    {"exact", info.exact != 0}, {"y_modified", moved}};
        } else {
          int d = 0;
          check(sp_policy_assign(policy.get(), y.data(), y.size(), &d), "assign unit " + std::to_string(i));
          csv += std::to_string(i) + ',' + std::to_string(d);
          single = {{"assigned_intervention", d}};
        }
        csv += "\n";
      }
      const std::string name = br ? "best_response.csv" : "assignments.csv";
      run.emit(name, csv);
      Json manifest_cfg = cfg;
      manifest_cfg["policy_file"] = policy_file;
      if (!data_path.empty()) manifest_cfg["data"] = data_path;
      if (!y_text.empty()) manifest_cfg["y"] = y_text;
      if (br) manifest_cfg["delta"] = budget;
      run.finish(manifest_cfg, seed_of(cfg));
      if (ys.size() == 1)
        std::cout << single.dump() << "\n";
      else
        std::cout << ys.size() << " units -> " << run.out(name).string() << "\n";
    } else if (*sot) {
      Run run("check-sot", common);
      Json req = load_config(common, true);
      if (!mode.empty()) req["mode"] = mode;
      if (delta) req["delta"] = *delta;
      char* rep = nullptr;
      check(sp_check_sot(req.dump().c_str(), &rep), "check-sot");
      const std::string report = take(rep);
      run.emit("sot.json", report + "\n");
      run.finish(req, seed_of(req));
      const Json r = Json::parse(report);
      std::cout << "separation of types (" << r["mode"].get<std::string>() << "): " << r["verdict"].get<std::string>()
                << (r["low_confidence"].get<bool>() ? " (low confidence)" : "") << ", " << r["violations"].size()
                << " violating units\n";
    } else if (*sweep) {
      Run run("sweep", common);
      const Json cfg = load_config(common, true);
      const auto ratios = parse_list(ratios_text, "--ratios");
      char* csv = nullptr;
      char* js = nullptr;
      check(sp_delta_sweep(cfg.dump().c_str(), ratios.data(), ratios.size(), jobs, &csv, &js), "sweep");
      const std::string table = take(csv);
      run.emit("sweep.csv", table);
      run.emit("sweep.json", take(js) + "\n");
      Json manifest_cfg = cfg;
      manifest_cfg["ratios"] = ratios;
      run.finish(manifest_cfg, seed_of(cfg));
      std::cout << table;
    } else if (*eval) {
      Run run("evaluate", common);
      Json cfg = load_config(common, true);
      if (!policy_name.empty()) cfg["policy"] = policy_name;
      if (delta_hat) cfg["delta_hat"] = *delta_hat;
      char* out = nullptr;
      if (!policy_file.empty()) {
        auto policy = load_policy(policy_file);
        check(sp_evaluate_policy(cfg.dump().c_str(), policy.get(), records, &out), "evaluate");
      } else {
        check(sp_run_experiment(cfg.dump().c_str(), records, &out), "evaluate");
      }
      const std::string metrics = take(out);
      run.emit("metrics.json", metrics + "\n");
      Json manifest_cfg = cfg;
      if (!policy_file.empty()) manifest_cfg["policy_file"] = policy_file;
      run.finish(manifest_cfg, seed_of(cfg));
      const Json m = Json::parse(metrics);
      std::cout << "normalized delta revenue " << m["normalized_delta_revenue"].dump() << ", misassignment "
                << m["misassignment_rate"].dump() << ", mean squared regret " << m["mean_squared_regret"].dump()
                << "\n";
    } else if (*demo_imp) {
      Run run("demo-impossible", common);
      char* rep = nullptr;
      check(sp_demo_impossible(alpha, zeta, demo_delta, &rep), "demo impossible");
      const std::string report = take(rep);
      run.emit("demo_impossible.json", report + "\n");
      run.finish(Json{{"alpha", alpha}, {"zeta", zeta}, {"delta", demo_delta}}, std::nullopt);
      const Json r = Json::parse(report);
      std::cout << "zeta/2 + alpha = " << r["lhs"].dump() << ", delta (sqrt(1.25) - 0.5) = " << r["rhs"].dump()
                << ": " << r["verdict"].get<std::string>() << "\n";
    } else if (*demo_si) {
      Run run("demo-si-failure", common);
      Json cfg = load_config(common, false);
      const std::pair<const char*, Json> flags[] = {{"delta", demo_delta},     {"gap-factor", gap_factor},
                                                    {"sigma", sigma},          {"m-train", m_train},
                                                    {"m-test", m_test}};
      for (const auto& [flag, value] : flags) {
        std::string key = flag;
        std::replace(key.begin(), key.end(), '-', '_');
        if (!cfg.contains(key) || demo_si->count(std::string("--") + flag)) cfg[key] = value;
      }
      if (rank > 0) cfg["rank"] = rank;
      char* rep = nullptr;
      check(sp_demo_si_failure(cfg.dump().c_str(), &rep), "demo si-failure");
      const std::string report = take(rep);
      run.emit("demo_si_failure.json", report + "\n");
      run.finish(cfg, seed_of(cfg));
      const Json r = Json::parse(report);
      std::cout << "misassignment: synthetic interventions " << r["si_misassignment"].dump() << ", shifted policy "
                << r["alg1_misassignment"].dump() << "\n";
    } else if (*demo_gap) {
      Run run("demo-gap-necessity", common);
      std::vector<int> ns;
      for (double v : parse_list(n_text, "--n-values")) ns.push_back(static_cast<int>(v));
      char* rep = nullptr;
      check(sp_demo_gap_necessity(theta1, theta2, c, alpha_small, demo_delta, ns.data(), ns.size(), &rep),
            "demo gap-necessity");
      const std::string report = take(rep);
      run.emit("demo_gap_necessity.json", report + "\n");
      run.finish(Json{{"theta1", theta1}, {"theta2", theta2}, {"c", c}, {"alpha_small", alpha_small},
                      {"delta", demo_delta}, {"n_values", ns}},
                 std::nullopt);
      const Json r = Json::parse(report);
      for (const auto& row : r["rows"])
        std::cout << "n=" << row["n"].dump() << ": minus -> " << row["target_minus"].dump() << ", plus -> "
                  << row["target_plus"].dump() << (row["flips"].get<bool>() ? " (flips)" : "") << "\n";
      std::cout << (r["matches_case_analysis"].get<bool>() ? "matches" : "DOES NOT match") << " the case analysis\n";
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
