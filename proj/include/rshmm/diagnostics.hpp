// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "rshmm/em_fit.hpp"

namespace rshmm {

double aic(double loglik, int n_par);
/// n is the number of units.
double bic(double loglik, int n_par, int n);
double r_squared(double null_loglik, double loglik, int n, int r);

/// Classification indices from smoothed posteriors. NaN where undefined
/// (no RS component, or k = 1 for the construct-only variants).
struct SIndices {
  double S = 0.0;
  double S_L = 0.0;
  double S_U = 0.0;
  double S_L_RS = 0.0;
  double S_L_AWR = 0.0;
  std::vector<double> S_U_given_L;  // per construct state
  // (i, t) pairs skipped because the conditioning slice had no mass.
  int skipped_L_RS = 0;
  int skipped_L_AWR = 0;
  std::vector<int> skipped_U_given_L;
};

SIndices s_indices(const LatentPosteriors& post, int k, bool has_rs);

struct IndexReport {
  double loglik = 0.0;
  double null_loglik = 0.0;
  int n_par = 0;
  int n = 0;
  int r = 0;
  double aic = 0.0;
  double bic = 0.0;
  double r2 = 0.0;
  SIndices s;
};

IndexReport fit_indices(const PanelDataset& data, const FitResult& fit, double null_loglik);
std::string index_report_json(const IndexReport& rep);

struct ResidualCell {
  int t = 0;
  int config = 0;    // configuration id within occasion t
  int y = 0;         // response configuration id
  double count = 0.0;
  double expected = 0.0;
  double residual = 0.0;  // NaN when expected < 1e-10
};

struct ConfigChiSquare {
  int t = 0;
  int config = 0;
  int units = 0;
  double chi2 = 0.0;      // over cells with a residual
  double average = 0.0;   // chi2 / number of response configurations
  int na_cells = 0;
};

/// Full-conditional Pearson residuals for every occasion, covariate
/// configuration and configuration of the selected responses.
struct ResidualTable {
  std::vector<int> responses;   // indices of the responses kept
  std::vector<int> categories;  // their category counts
  int configurations = 0;       // product of categories
  std::vector<ResidualCell> cells;
  std::vector<ConfigChiSquare> chi2;
};

ResidualTable residuals(const PanelDataset& data, const ParamSet& params);

/// Sums counts and expectations over the responses not in `subset`.
ResidualTable marginalize(const ResidualTable& full, const std::vector<int>& subset);

/// Share of defined residuals inside [-bound, bound].
double share_within(const ResidualTable& table, double bound = 2.0);

/// time,config,response_config,y,count,expected,residual (1-based ids,
/// y as dash-joined categories).
std::string residuals_csv(const ResidualTable& table);
/// time,config,units,chi2,chi2_avg,na_cells
std::string chi2_csv(const ResidualTable& table);

}  // namespace rshmm
