// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rshmm/rshmm.h"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

struct Failure : std::runtime_error {
  int exit_code;
  Failure(int code, const std::string& what) : std::runtime_error(what), exit_code(code) {}
};

void check(rshmm_status st) {
  if (st == RSHMM_OK) return;
  const bool numerical = st == RSHMM_E_NUMERICAL_FAILURE || st == RSHMM_E_ALL_STARTS_FAILED ||
                         st == RSHMM_E_NON_FINITE_WEIGHTS;
  throw Failure(numerical ? kExitNumerical : kExitInput, rshmm_last_error());
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Dataset = Handle<rshmm_dataset, rshmm_dataset_free>;
using Model = Handle<rshmm_model, rshmm_model_free>;
using Fit = Handle<rshmm_fit, rshmm_fit_free>;

std::string take(char* s) {
  std::string out = s ? s : "";
  rshmm_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(kExitInput, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string schema_for(const std::string& data, const std::string& schema) {
  if (!schema.empty()) return schema;
  fs::path p(data);
  return (p.parent_path() / (p.stem().string() + ".schema.json")).string();
}

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      const auto dash = item.find('-');
      if (dash != std::string::npos && dash > 0) {
        const int a = std::stoi(item.substr(0, dash)), b = std::stoi(item.substr(dash + 1));
        for (int k = a; k <= b; ++k) ks.push_back(k);
      } else {
        ks.push_back(std::stoi(item));
      }
    }
  } catch (const std::exception&) {
    throw Failure(kExitInput, "bad --k value '" + text + "'");
  }
  if (ks.empty()) throw Failure(kExitInput, "--k is empty");
  return ks;
}

// Outputs are held in memory and committed only when the command succeeded.
class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {}
  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void commit(const ojson& manifest_base) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Failure(kExitInput, "cannot create " + dir_ + ": " + ec.message());
    ojson manifest = manifest_base;
    ojson list = ojson::array();
    for (const auto& [name, _] : files_) list.push_back(name);
    manifest["outputs"] = list;
    files_.emplace_back("manifest.json", manifest.dump(2) + "\n");
    std::vector<std::pair<fs::path, fs::path>> moves;
    for (const auto& [name, content] : files_) {
      const fs::path final_path = fs::path(dir_) / name;
      const fs::path tmp = fs::path(dir_) / ("." + name + ".tmp");
      std::ofstream out(tmp, std::ios::binary);
      out << content;
      out.close();
      if (!out) {
        for (const auto& [t, _] : moves) fs::remove(t, ec);
        fs::remove(tmp, ec);
        throw Failure(kExitInput, "cannot write " + final_path.string());
      }
      moves.emplace_back(tmp, final_path);
    }
    for (const auto& [tmp, final_path] : moves) {
      fs::rename(tmp, final_path, ec);
      if (ec) throw Failure(kExitInput, "cannot rename into " + final_path.string());
    }
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

struct Common {
  std::string data, schema, out = ".";
  std::uint64_t seed = 1;
  int threads = 0;
};

struct FitFlags {
  std::string spec, variant, config, warm;
  int k = 0;
  int starts = -1;
  int max_iter = -1;
};

struct Run {
  Run(std::string cmd, std::uint64_t s) : command(std::move(cmd)), seed(s) {}

  std::string command;
  ojson config;
  std::string data_hash;
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  ojson manifest() const {
    ojson m;
    m["command"] = command;
    m["config"] = config;
    m["config_hash"] = hex(fnv1a(command + config.dump()));
    m["data_hash"] = data_hash.empty() ? ojson(nullptr) : ojson(data_hash);
    m["seed"] = seed;
    m["version"] = rshmm_version();
    m["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
  }
};

void load_data(const Common& c, Dataset& data, Run& run) {
  if (c.data.empty()) throw Failure(kExitInput, "--data is required");
  const auto schema = schema_for(c.data, c.schema);
  check(rshmm_dataset_load(c.data.c_str(), schema.c_str(), data.out()));
  run.data_hash = hex(rshmm_dataset_hash(data.get()));
  run.config["data"] = c.data;
  run.config["schema"] = schema;
}

rshmm_fit_options fit_options(const FitFlags& f, const Common& c, Run& run) {
  rshmm_fit_options o;
  rshmm_fit_options_default(&o);
  o.seed = c.seed;
  if (!f.config.empty()) {
    ojson j;
    try {
      j = ojson::parse(read_file(f.config));
      o.tol_loglik = j.value("tol_loglik", o.tol_loglik);
      o.tol_param = j.value("tol_param", o.tol_param);
      o.tol_score = j.value("tol_score", o.tol_score);
      o.max_iter = j.value("max_iter", o.max_iter);
      o.n_starts = j.value("n_starts", o.n_starts);
      o.start_dispersion = j.value("start_dispersion", o.start_dispersion);
      o.polish = j.value("polish", o.polish != 0) ? 1 : 0;
      o.data_start = j.value("data_start", o.data_start != 0) ? 1 : 0;
    } catch (const ojson::exception& e) {
      throw Failure(kExitInput, "fit config: " + std::string(e.what()));
    }
  }
  if (f.starts >= 0) o.n_starts = f.starts;
  if (f.max_iter >= 0) o.max_iter = f.max_iter;
  run.config["fit"] = {{"tol_loglik", o.tol_loglik}, {"tol_param", o.tol_param},
                       {"tol_score", o.tol_score},   {"max_iter", o.max_iter},
                       {"n_starts", o.n_starts},     {"seed", o.seed},
                       {"start_dispersion", o.start_dispersion},
                       {"polish", o.polish != 0},    {"data_start", o.data_start != 0}};
  return o;
}

std::string spec_json(const FitFlags& f) {
  if (!f.spec.empty()) return read_file(f.spec);
  if (f.variant.empty() || f.k < 1)
    throw Failure(kExitInput, "either --spec or both --variant and --k are required");
  return ojson{{"variant", f.variant}, {"k", f.k}}.dump();
}

// Accepts a fit.json or a bare parameter file.
void load_model(const std::string& path, Model& model) {
  const std::string text = read_file(path);
  bool is_fit = false;
  try {
    is_fit = ojson::parse(text).contains("params");
  } catch (const ojson::exception& e) {
    throw Failure(kExitInput, path + ": " + e.what());
  }
  if (is_fit) {
    Fit fit;
    check(rshmm_fit_from_json(text.c_str(), fit.out()));
    check(rshmm_fit_model(fit.get(), model.out()));
  } else {
    check(rshmm_model_from_json(text.c_str(), model.out()));
  }
}

int cmd_simulate(const Common& c, const std::string& model_path, int n, int T,
                 const std::string& covariates, const std::vector<double>& prevalences) {
  Run run("simulate", c.seed);
  Model model;
  if (model_path.empty()) {
    check(rshmm_model_reference(model.out()));
  } else {
    load_model(model_path, model);
  }
  Dataset cov;
  if (!covariates.empty()) {
    const auto schema = schema_for(covariates, "");
    check(rshmm_dataset_load(covariates.c_str(), schema.c_str(), cov.out()));
    n = rshmm_dataset_units(cov.get());
    T = rshmm_dataset_occasions(cov.get());
  }
  run.config = {{"model", model_path.empty() ? ojson("reference") : ojson(model_path)},
                {"units", n},
                {"occasions", T},
                {"covariates", covariates.empty() ? ojson(nullptr) : ojson(covariates)},
                {"prevalences", prevalences}};
  Dataset sim;
  char* paths = nullptr;
  check(rshmm_simulate(model.get(), n, T, c.seed, cov.get(),
                       prevalences.empty() ? nullptr : prevalences.data(),
                       static_cast<int>(prevalences.size()), sim.out(), &paths));
  const std::string paths_csv = take(paths);
  run.data_hash = hex(rshmm_dataset_hash(sim.get()));

  // The dataset writer wants real paths; write to a scratch area, then stage.
  const fs::path scratch = fs::temp_directory_path() / ("rshmm-sim-" + hex(fnv1a(run.data_hash + c.out)));
  fs::create_directories(scratch);
  const auto csv_tmp = (scratch / "panel.csv").string(), schema_tmp = (scratch / "panel.schema.json").string();
  const rshmm_status st = rshmm_dataset_write(sim.get(), csv_tmp.c_str(), schema_tmp.c_str());
  std::string csv_text, schema_text;
  if (st == RSHMM_OK) {
    csv_text = read_file(csv_tmp);
    schema_text = read_file(schema_tmp);
  }
  std::error_code ec;
  fs::remove_all(scratch, ec);
  check(st);

  std::string model_json;
  {
    char* s = nullptr;
    check(rshmm_model_to_json(model.get(), &s));
    model_json = take(s);
  }
  Outputs out(c.out);
  out.add("panel.csv", csv_text);
  out.add("panel.schema.json", schema_text);
  out.add("paths.csv", paths_csv);
  out.add("truth.json", model_json);
  out.commit(run.manifest());
  std::cout << "simulated " << rshmm_dataset_units(sim.get()) << " units x "
            << rshmm_dataset_occasions(sim.get()) << " occasions into " << c.out << "\n";
  return kExitOk;
}

int cmd_fit(const Common& c, const FitFlags& f) {
  Run run("fit", c.seed);
  Dataset data;
  load_data(c, data, run);
  const std::string spec = spec_json(f);
  run.config["spec"] = ojson::parse(spec);
  const auto opts = fit_options(f, c, run);
  Model warm;
  if (!f.warm.empty()) {
    load_model(f.warm, warm);
    run.config["warm"] = f.warm;
  }
  Fit fit;
  check(rshmm_estimate(data.get(), spec.c_str(), &opts, warm.get(), fit.out()));
  Model model;
  check(rshmm_fit_model(fit.get(), model.out()));
  char *fj = nullptr, *tr = nullptr, *tab = nullptr, *pmf = nullptr;
  check(rshmm_fit_to_json(fit.get(), data.get(), &fj));
  const std::string fit_json = take(fj);
  check(rshmm_fit_trace_csv(fit.get(), &tr));
  const std::string trace = take(tr);
  check(rshmm_model_table_csv(model.get(), data.get(), &tab));
  const std::string table = take(tab);
  check(rshmm_model_pmf_csv(model.get(), &pmf));
  const std::string pmfs = take(pmf);

  Outputs out(c.out);
  out.add("fit.json", fit_json);
  out.add("trace.csv", trace);
  out.add("params.csv", table);
  out.add("pmf.csv", pmfs);
  out.commit(run.manifest());
  const bool conv = rshmm_fit_converged(fit.get()) != 0;
  std::printf("loglik %.6f  n_par %d  %s\n", rshmm_fit_loglik(fit.get()), rshmm_fit_n_par(fit.get()),
              conv ? "converged" : "NOT converged");
  return conv ? kExitOk : kExitNumerical;
}

int cmd_select(const Common& c, const FitFlags& f, const std::string& ks_text) {
  Run run("select", c.seed);
  Dataset data;
  load_data(c, data, run);
  const std::string variants = f.variant.empty() ? "M8" : f.variant;
  const auto ks = parse_ks(ks_text);
  run.config["variants"] = variants;
  run.config["k"] = ks;
  const auto opts = fit_options(f, c, run);
  char *csv = nullptr, *json = nullptr;
  int best = -1;
  check(rshmm_select(data.get(), variants.c_str(), ks.data(), static_cast<int>(ks.size()), &opts,
                     &csv, &json, &best));
  const std::string table = take(csv);
  const std::string report = take(json);
  Outputs out(c.out);
  out.add("selection.csv", table);
  out.add("selection.json", report);
  out.commit(run.manifest());
  std::cout << table;
  if (best < 0) return kExitNumerical;
  return ojson::parse(report)["rows"][best].value("converged", false) ? kExitOk : kExitNumerical;
}

int cmd_se(const Common& c, const std::string& fit_path, const std::string& methods, int boot_reps) {
  Run run("se", c.seed);
  Dataset data;
  load_data(c, data, run);
  if (fit_path.empty()) throw Failure(kExitInput, "--fit is required");
  Model model;
  load_model(fit_path, model);
  run.config["fit"] = fit_path;
  run.config["methods"] = methods;
  run.config["boot_reps"] = boot_reps;
  char *csv = nullptr, *json = nullptr;
  check(rshmm_standard_errors(data.get(), model.get(), methods.c_str(), boot_reps, c.seed, &csv,
                              &json));
  const std::string table = take(csv);
  Outputs out(c.out);
  out.add("se.csv", table);
  out.add("se.json", take(json));
  out.commit(run.manifest());
  std::cout << "wrote standard errors (" << methods << ") to " << c.out << "\n";
  return kExitOk;
}

int cmd_residuals(const Common& c, const std::string& fit_path, const std::string& subset) {
  Run run("residuals", c.seed);
  Dataset data;
  load_data(c, data, run);
  if (fit_path.empty()) throw Failure(kExitInput, "--fit is required");
  Model model;
  load_model(fit_path, model);
  run.config["fit"] = fit_path;
  run.config["responses"] = subset.empty() ? ojson(nullptr) : ojson(subset);
  char *res = nullptr, *chi = nullptr;
  double share = 0.0;
  check(rshmm_residuals(data.get(), model.get(), subset.empty() ? nullptr : subset.c_str(), &res,
                        &chi, &share));
  Outputs out(c.out);
  out.add("residuals.csv", take(res));
  out.add("chi2.csv", take(chi));
  ojson summary{{"share_within_2", std::isfinite(share) ? ojson(share) : ojson(nullptr)}};
  out.add("residual_summary.json", summary.dump(2) + "\n");
  out.commit(run.manifest());
  std::printf("share of residuals in [-2, 2]: %.4f\n", share);
  return kExitOk;
}

int cmd_gof(const Common& c, const std::string& fit_path) {
  Run run("gof", c.seed);
  Dataset data;
  load_data(c, data, run);
  if (fit_path.empty()) throw Failure(kExitInput, "--fit is required");
  Fit fit;
  check(rshmm_fit_from_json(read_file(fit_path).c_str(), fit.out()));
  run.config["fit"] = fit_path;
  char* json = nullptr;
  check(rshmm_indices(data.get(), fit.get(), &json));
  const std::string report = take(json);
  Outputs out(c.out);
  out.add("indices.json", report);
  out.commit(run.manifest());
  std::cout << report;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent Markov models with response-style regimes for ordinal panels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rshmm_version()));

  Common common;
  FitFlags fitf;
  std::string model_path, covariates, fit_path, methods = "opim", subset, ks_text = "2-4";
  std::vector<double> prevalences;
  int units = 1000, occasions = 6, boot_reps = 200;

  auto add_common = [&](CLI::App* sub, bool with_data) {
    if (with_data) {
      sub->add_option("--data", common.data, "Panel CSV")->required();
      sub->add_option("--schema", common.schema, "Schema JSON (default: <data>.schema.json)");
    }
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--seed", common.seed, "Random seed");
    sub->add_option("--threads", common.threads, "Worker thread cap (default: RSHMM_THREADS)");
  };
  auto add_fit_flags = [&](CLI::App* sub) {
    sub->add_option("--config", fitf.config, "Fit configuration JSON");
    sub->add_option("--starts", fitf.starts, "Number of random starts");
    sub->add_option("--max-iter", fitf.max_iter, "EM iteration cap");
  };

  auto* sim = app.add_subcommand("simulate", "Simulate a panel from a parameter file");
  add_common(sim, false);
  sim->add_option("--model", model_path, "Parameter or fit JSON (default: reference model)");
  sim->add_option("--units", units, "Number of units")->check(CLI::PositiveNumber);
  sim->add_option("--occasions", occasions, "Number of occasions")->check(CLI::Range(2, 1000));
  sim->add_option("--covariates", covariates, "Panel whose covariates are reused");
  sim->add_option("--prevalence", prevalences, "Binary covariate prevalences")->delimiter(',');

  auto* fit = app.add_subcommand("fit", "Fit one model");
  add_common(fit, true);
  add_fit_flags(fit);
  fit->add_option("--spec", fitf.spec, "Model spec JSON");
  fit->add_option("--variant", fitf.variant, "Named variant (M1..M8)");
  fit->add_option("--k", fitf.k, "Number of latent states");
  fit->add_option("--warm", fitf.warm, "Warm start (parameter or fit JSON)");

  auto* sel = app.add_subcommand("select", "Fit a variant x k grid and compare by BIC");
  add_common(sel, true);
  add_fit_flags(sel);
  sel->add_option("--variant", fitf.variant, "Comma-separated variants (default M8)");
  sel->add_option("--k", ks_text, "k values, e.g. 2,3,4 or 2-4");

  auto* se = app.add_subcommand("se", "Standard errors of a fitted model");
  add_common(se, true);
  se->add_option("--fit", fit_path, "fit.json")->required();
  se->add_option("--method", methods, "Comma-separated subset of oim,opim,sdw,boot");
  se->add_option("--boot-reps", boot_reps, "Bootstrap replicates")->check(CLI::Range(2, 100000));

  auto* res = app.add_subcommand("residuals", "Full-conditional Pearson residuals");
  add_common(res, true);
  res->add_option("--fit", fit_path, "fit.json")->required();
  res->add_option("--responses", subset, "Comma-separated 1-based responses to keep");

  auto* gof = app.add_subcommand("gof", "Information criteria, R2 and S indices");
  add_common(gof, true);
  gof->add_option("--fit", fit_path, "fit.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (common.threads > 0) {
    rshmm_set_threads(common.threads);
  } else if (const char* env = std::getenv("RSHMM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) rshmm_set_threads(n);
  }

  try {
    if (*sim) return cmd_simulate(common, model_path, units, occasions, covariates, prevalences);
    if (*fit) return cmd_fit(common, fitf);
    if (*sel) return cmd_select(common, fitf, ks_text);
    if (*se) return cmd_se(common, fit_path, methods, boot_reps);
    if (*res) return cmd_residuals(common, fit_path, subset);
    if (*gof) return cmd_gof(common, fit_path);
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
