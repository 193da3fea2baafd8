// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rshmm/panel_data.hpp"
#include "rshmm/param_set.hpp"

namespace rshmm {

struct SimConfig {
  ParamSet params;
  int n = 1000;
  int T = 6;
  std::uint64_t seed = 1;
  /// Covariates to hold fixed; when absent independent binary columns are
  /// drawn with `prevalences`, and transition covariates copy the initial
  /// ones at every occasion.
  std::optional<PanelDataset> covariates;
  std::vector<double> prevalences;
  std::vector<std::string> covariate_names;
};

struct SimResult {
  PanelDataset data;
  std::vector<int> path_u;  // [i * T + t], 0 = RS, 1 = AWR
  std::vector<int> path_l;  // [i * T + t], 0-based construct state
};

SimResult simulate(const SimConfig& config);

/// Binary covariate design: one profile per unit, copied into every block
/// (each block takes its first p columns) and into every occasion.
PanelDataset generate_covariates(int n, int T, const std::vector<int>& categories,
                                 const ModelDims& dims, const std::vector<double>& prevalences,
                                 const std::vector<std::string>& names, std::uint64_t seed);

/// New responses drawn at `params` with the covariates of `data` kept.
PanelDataset parametric_bootstrap_panel(const PanelDataset& data, const ParamSet& params,
                                        std::uint64_t seed);

/// Seven binary covariates shaped like a household-survey design.
std::vector<double> shiw_prevalences();
std::vector<std::string> shiw_covariate_names();

/// Reference parameters: parallel-baseline transitions, stereotype initial
/// logits, homogeneous RS transitions, k = 3, responses with 6 and 3
/// categories, seven covariates.
ParamSet shiw_truth();

/// Latent paths as CSV: unit_id,time,u,l (1-based states).
std::string paths_csv(const SimResult& sim);

}  // namespace rshmm
