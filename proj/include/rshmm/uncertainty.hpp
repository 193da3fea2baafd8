// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rshmm/em_fit.hpp"

namespace rshmm {

enum class SeMethod { OIM, OPIM, SDW, BOOT };
std::string to_string(SeMethod m);
SeMethod parse_se_method(const std::string& s);

/// Per-unit scores and the two information matrices, over the unclamped
/// parameters listed in `coords`.
struct ScoreSet {
  std::vector<int> coords;
  Mat unit;        // n x P, all parameters
  Vec aggregate;   // P
  Mat opim;        // sum_i s_i s_i', coords x coords
  Mat oim;         // -d score / d theta, symmetrized, coords x coords
};

/// `with_oim` false skips the finite-difference Jacobian.
ScoreSet score_set(const PanelDataset& data, const ParamSet& params, bool with_oim = true);

struct BootConfig {
  int replicates = 200;
  std::uint64_t seed = 1;
  FitConfig fit;  // refits start at the estimate with a single start
};

struct SeResult {
  SeMethod method = SeMethod::OPIM;
  Mat cov;                // P x P, NaN rows/columns for unavailable parameters
  Vec se;                 // P, NaN = NA
  bool singular = false;  // pseudo-inverse used
  bool psd = true;
  double condition = 0.0;
  int replicates = 0;     // BOOT: replicates kept
  int dropped = 0;        // BOOT: replicates that failed or did not converge
};

/// Inverse of a symmetric matrix by eigen-decomposition. Eigenvalues below
/// rel_tol * max |lambda| in magnitude are dropped (pseudo-inverse).
struct SymmetricInverse {
  Mat inverse;
  bool singular = false;
  bool psd = true;
  double condition = 0.0;
};
SymmetricInverse symmetric_inverse(const Mat& m, double rel_tol = 1e-10);

SeResult standard_errors(const PanelDataset& data, const ParamSet& params, SeMethod method,
                         const BootConfig& boot = {});

/// All requested methods, sharing one score set.
std::vector<SeResult> standard_errors(const PanelDataset& data, const ParamSet& params,
                                      const std::vector<SeMethod>& methods,
                                      const BootConfig& boot = {});

/// One row per parameter: block,parameter,estimate, then one column per
/// method ("NA" where unavailable).
std::string se_table_csv(const ParamSet& params, const std::vector<SeResult>& results,
                         const CovariateNames& names = {});
std::string se_table_json(const ParamSet& params, const std::vector<SeResult>& results,
                          const CovariateNames& names = {});

}  // namespace rshmm
