// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "rshmm/diagnostics.hpp"

namespace rshmm {

struct SelectionRow {
  ModelSpec spec;
  bool ok = false;
  std::string error;
  double loglik = 0.0;
  int n_par = 0;
  double bic = 0.0;
  double s_k = 0.0;
  double r2 = 0.0;
  bool converged = false;
  bool best = false;
};

struct SelectionResult {
  std::vector<SelectionRow> rows;  // grid order: variants outer, k inner
  std::vector<FitResult> fits;     // aligned with rows (default when failed)
  double null_loglik = 0.0;
  int best = -1;                   // row with the smallest BIC
};

/// Fits every (variant, k) cell. Within one k the cells are fitted in
/// increasing parameter count and every earlier fit that nests in a later
/// spec is added to its warm starts. Failed cells are kept as rows with
/// ok = false.
SelectionResult select_models(const PanelDataset& data, const std::vector<ModelSpec>& grid,
                              const FitConfig& config = {});

/// Grid of named variants times k values.
std::vector<ModelSpec> variant_grid(const std::vector<std::string>& variants,
                                    const std::vector<int>& ks);

/// Columns Model,pi_L,pi_UL,k,loglike,n_par,BIC,S_k,R2; the best row's
/// model name carries a trailing '*'.
std::string selection_csv(const SelectionResult& res);
std::string selection_json(const SelectionResult& res);

}  // namespace rshmm
