// SPDX-License-Identifier: Apache-2.0
#include "rshmm/rshmm.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "rshmm/diagnostics.hpp"
#include "rshmm/error.hpp"
#include "rshmm/parallel.hpp"
#include "rshmm/selection.hpp"
#include "rshmm/simulator.hpp"
#include "rshmm/uncertainty.hpp"

struct rshmm_dataset {
  rshmm::PanelDataset data;
};
struct rshmm_model {
  rshmm::ParamSet params;
};
struct rshmm_fit {
  rshmm::FitResult fit;
};

namespace {

thread_local std::string last_error;

template <class F>
rshmm_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return RSHMM_OK;
  } catch (const rshmm::Error& e) {
    last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    last_error = std::string("internal: ") + e.what();
    return RSHMM_E_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) rshmm::raise(rshmm::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

std::vector<std::string> split_list(const char* text) {
  std::vector<std::string> out;
  std::stringstream ss(text ? text : "");
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

rshmm::FitConfig to_config(const rshmm_fit_options* o) {
  rshmm::FitConfig c;
  if (!o) return c;
  c.tol_loglik = o->tol_loglik;
  c.tol_param = o->tol_param;
  c.tol_score = o->tol_score;
  c.max_iter = o->max_iter;
  c.n_starts = o->n_starts;
  c.seed = o->seed;
  c.start_dispersion = o->start_dispersion;
  c.polish = o->polish != 0;
  c.data_start = o->data_start != 0;
  return c;
}

rshmm::CovariateNames names_of(const rshmm::PanelDataset& d) {
  return {d.x_L_names, d.x_U_names, d.z_L_names, d.z_U_names};
}

}  // namespace

extern "C" {

const char* rshmm_last_error(void) { return last_error.c_str(); }

const char* rshmm_version(void) { return RSHMM_VERSION; }

void rshmm_set_threads(int n) { rshmm::set_threads(n); }

void rshmm_string_free(char* s) { std::free(s); }

rshmm_status rshmm_dataset_load(const char* csv_path, const char* schema_path, rshmm_dataset** out) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(schema_path, "schema_path");
    require(out, "out");
    auto schema = rshmm::PanelSchema::load(schema_path);
    *out = new rshmm_dataset{rshmm::load_panel(csv_path, schema)};
  });
}

rshmm_status rshmm_dataset_parse(const char* csv_text, const char* schema_json, rshmm_dataset** out) {
  return guarded([&] {
    require(csv_text, "csv_text");
    require(schema_json, "schema_json");
    require(out, "out");
    auto schema = rshmm::PanelSchema::from_json_text(schema_json);
    *out = new rshmm_dataset{rshmm::parse_panel(csv_text, schema)};
  });
}

rshmm_status rshmm_dataset_write(const rshmm_dataset* data, const char* csv_path,
                                 const char* schema_path) {
  return guarded([&] {
    require(data, "data");
    require(csv_path, "csv_path");
    require(schema_path, "schema_path");
    rshmm::write_panel(data->data, csv_path, schema_path);
  });
}

void rshmm_dataset_free(rshmm_dataset* data) { delete data; }

int rshmm_dataset_units(const rshmm_dataset* data) { return data ? data->data.n : 0; }
int rshmm_dataset_occasions(const rshmm_dataset* data) { return data ? data->data.T : 0; }
int rshmm_dataset_responses(const rshmm_dataset* data) { return data ? data->data.r() : 0; }

rshmm_status rshmm_dataset_dims_json(const rshmm_dataset* data, char** out) {
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    *out = dup(rshmm::dims_to_json(data->data.dims()));
  });
}

uint64_t rshmm_dataset_hash(const rshmm_dataset* data) {
  if (!data) return 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : rshmm::panel_to_csv(data->data)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

rshmm_status rshmm_count_params(const char* spec_json, const char* dims_json, int* out) {
  return guarded([&] {
    require(spec_json, "spec_json");
    require(dims_json, "dims_json");
    require(out, "out");
    const auto spec = rshmm::spec_from_json(spec_json);
    spec.validate();
    *out = rshmm::count_params(spec, rshmm::dims_from_json(dims_json));
  });
}

rshmm_status rshmm_model_from_json(const char* json, rshmm_model** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new rshmm_model{rshmm::params_from_json(json)};
  });
}

rshmm_status rshmm_model_to_json(const rshmm_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = dup(rshmm::params_to_json(model->params));
  });
}

rshmm_status rshmm_model_reference(rshmm_model** out) {
  return guarded([&] {
    require(out, "out");
    *out = new rshmm_model{rshmm::shiw_truth()};
  });
}

void rshmm_model_free(rshmm_model* model) { delete model; }

int rshmm_model_param_count(const rshmm_model* model) { return model ? model->params.size() : 0; }

rshmm_status rshmm_model_table_csv(const rshmm_model* model, const rshmm_dataset* data,
                                   char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = dup(rshmm::se_table_csv(model->params, {},
                                   data ? names_of(data->data) : rshmm::CovariateNames{}));
  });
}

rshmm_status rshmm_model_pmf_csv(const rshmm_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = dup(rshmm::pmf_table_csv(model->params));
  });
}

rshmm_status rshmm_simulate(const rshmm_model* model, int n, int T, uint64_t seed,
                            const rshmm_dataset* covariates, const double* prevalences, int n_prev,
                            rshmm_dataset** out, char** paths_csv) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    rshmm::SimConfig cfg;
    cfg.params = model->params;
    cfg.n = n;
    cfg.T = T;
    cfg.seed = seed;
    if (covariates) cfg.covariates = covariates->data;
    if (prevalences && n_prev > 0) cfg.prevalences.assign(prevalences, prevalences + n_prev);
    auto sim = rshmm::simulate(cfg);
    std::string paths = paths_csv ? rshmm::paths_csv(sim) : std::string();
    *out = new rshmm_dataset{std::move(sim.data)};
    if (paths_csv) *paths_csv = dup(paths);
  });
}

rshmm_status rshmm_bootstrap_panel(const rshmm_dataset* data, const rshmm_model* model,
                                   uint64_t seed, rshmm_dataset** out) {
  return guarded([&] {
    require(data, "data");
    require(model, "model");
    require(out, "out");
    *out = new rshmm_dataset{rshmm::parametric_bootstrap_panel(data->data, model->params, seed)};
  });
}

void rshmm_fit_options_default(rshmm_fit_options* opts) {
  if (!opts) return;
  const rshmm::FitConfig c;
  opts->tol_loglik = c.tol_loglik;
  opts->tol_param = c.tol_param;
  opts->tol_score = c.tol_score;
  opts->max_iter = c.max_iter;
  opts->n_starts = c.n_starts;
  opts->seed = c.seed;
  opts->start_dispersion = c.start_dispersion;
  opts->polish = c.polish ? 1 : 0;
  opts->data_start = c.data_start ? 1 : 0;
}

rshmm_status rshmm_estimate(const rshmm_dataset* data, const char* spec_json,
                            const rshmm_fit_options* opts, const rshmm_model* warm,
                            rshmm_fit** out) {
  return guarded([&] {
    require(data, "data");
    require(spec_json, "spec_json");
    require(out, "out");
    auto cfg = to_config(opts);
    if (warm) cfg.warm_starts.push_back(warm->params);
    const auto spec = rshmm::spec_from_json(spec_json);
    *out = new rshmm_fit{rshmm::fit(data->data, spec, cfg)};
  });
}

rshmm_status rshmm_fit_from_json(const char* json, rshmm_fit** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new rshmm_fit{rshmm::fit_from_json(json)};
  });
}

void rshmm_fit_free(rshmm_fit* fit) { delete fit; }

double rshmm_fit_loglik(const rshmm_fit* fit) { return fit ? fit->fit.loglik : 0.0; }
int rshmm_fit_n_par(const rshmm_fit* fit) { return fit ? fit->fit.n_par : 0; }
int rshmm_fit_converged(const rshmm_fit* fit) { return fit && fit->fit.converged ? 1 : 0; }

rshmm_status rshmm_fit_model(const rshmm_fit* fit, rshmm_model** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "out");
    *out = new rshmm_model{fit->fit.params};
  });
}

rshmm_status rshmm_fit_to_json(const rshmm_fit* fit, const rshmm_dataset* data, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "out");
    *out = dup(rshmm::fit_to_json(fit->fit, data ? names_of(data->data) : rshmm::CovariateNames{}));
  });
}

rshmm_status rshmm_fit_trace_csv(const rshmm_fit* fit, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "out");
    *out = dup(rshmm::trace_csv(fit->fit));
  });
}

rshmm_status rshmm_null_loglik(const rshmm_dataset* data, double* out) {
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    *out = rshmm::fit_null(data->data).loglik;
  });
}

rshmm_status rshmm_select(const rshmm_dataset* data, const char* variants, const int* ks, int n_k,
                          const rshmm_fit_options* opts, char** csv, char** json, int* best_row) {
  return guarded([&] {
    require(data, "data");
    require(variants, "variants");
    require(ks, "ks");
    if (n_k < 1) rshmm::raise(rshmm::ErrorCode::InvalidArgument, "no k values");
    const auto grid = rshmm::variant_grid(split_list(variants), std::vector<int>(ks, ks + n_k));
    const auto res = rshmm::select_models(data->data, grid, to_config(opts));
    if (csv) *csv = dup(rshmm::selection_csv(res));
    if (json) *json = dup(rshmm::selection_json(res));
    if (best_row) *best_row = res.best;
  });
}

rshmm_status rshmm_standard_errors(const rshmm_dataset* data, const rshmm_model* model,
                                   const char* methods, int boot_reps, uint64_t seed, char** csv,
                                   char** json) {
  return guarded([&] {
    require(data, "data");
    require(model, "model");
    std::vector<rshmm::SeMethod> list;
    for (const auto& m : split_list(methods)) list.push_back(rshmm::parse_se_method(m));
    if (list.empty()) rshmm::raise(rshmm::ErrorCode::InvalidArgument, "no standard-error method");
    rshmm::BootConfig boot;
    boot.replicates = boot_reps;
    boot.seed = seed;
    const auto res = rshmm::standard_errors(data->data, model->params, list, boot);
    const auto names = names_of(data->data);
    if (csv) *csv = dup(rshmm::se_table_csv(model->params, res, names));
    if (json) *json = dup(rshmm::se_table_json(model->params, res, names));
  });
}

rshmm_status rshmm_indices(const rshmm_dataset* data, const rshmm_fit* fit, char** json) {
  return guarded([&] {
    require(data, "data");
    require(fit, "fit");
    require(json, "json");
    const double ll0 = rshmm::fit_null(data->data).loglik;
    *json = dup(rshmm::index_report_json(rshmm::fit_indices(data->data, fit->fit, ll0)));
  });
}

rshmm_status rshmm_residuals(const rshmm_dataset* data, const rshmm_model* model,
                             const char* subset, char** residuals_csv, char** chi2_csv,
                             double* share_within_2) {
  return guarded([&] {
    require(data, "data");
    require(model, "model");
    auto table = rshmm::residuals(data->data, model->params);
    if (subset) {
      std::vector<int> keep;
      for (const auto& s : split_list(subset)) {
        int j = 0;
        try {
          j = std::stoi(s);
        } catch (const std::exception&) {
          rshmm::raise(rshmm::ErrorCode::InvalidArgument, "bad response index '" + s + "'");
        }
        if (j < 1 || j > data->data.r())
          rshmm::raise(rshmm::ErrorCode::InvalidArgument, "response index out of range");
        keep.push_back(j - 1);
      }
      table = rshmm::marginalize(table, keep);
    }
    if (residuals_csv) *residuals_csv = dup(rshmm::residuals_csv(table));
    if (chi2_csv) *chi2_csv = dup(rshmm::chi2_csv(table));
    if (share_within_2) *share_within_2 = rshmm::share_within(table);
  });
}

}  // extern "C"
