// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rshmm/hmm_core.hpp"
#include "rshmm/logit_engine.hpp"

namespace rshmm {

/// One weighted problem per parameter block, aligned with
/// ParamSet::blocks(). Together they form the expected complete-data
/// log-likelihood Q(theta | theta_bar) for the posteriors they were built from.
using BlockProblems = std::vector<WeightedLogitProblem>;

/// Expected counts aggregated over covariate configurations.
BlockProblems aggregate_problems(const PanelDataset& data, const EstimationIndex& index,
                                 const LatentPosteriors& post, const ParamSet& params);

/// Expected counts of a single unit.
BlockProblems unit_problems(const PanelDataset& data, const LatentPosteriors& post,
                            const ParamSet& params, int i);

/// Q split into its six addends: init_L, init_U, trans_L, trans_U, RS
/// responses, AWR responses.
struct QAddends {
  double init_L = 0.0, init_U = 0.0, trans_L = 0.0, trans_U = 0.0, obs_RS = 0.0, obs_AWR = 0.0;
  double total() const { return init_L + init_U + trans_L + trans_U + obs_RS + obs_AWR; }
};
QAddends q_addends(const ParamSet& params, const BlockProblems& problems);

/// Gradient of Q over the packed parameters; at theta_bar = theta it equals
/// the score of the observed-data log-likelihood.
Vec q_gradient(const ParamSet& params, const BlockProblems& problems);

struct MStepReport {
  bool clamped = false;
  bool singular_step = false;
  bool flat_scores = false;
  int degenerate = 0;
};

/// Maximizes every block of Q from the current value of `params`.
MStepReport m_step(ParamSet& params, const BlockProblems& problems,
                   const LogitFitOptions& opts = {});

struct EmStepResult {
  ParamSet params;  // updated parameters
  double loglik;    // observed log-likelihood at the input parameters
};
EmStepResult em_step(const PanelDataset& data, const ParamSet& params);

/// Score of the observed-data log-likelihood (aggregate and per unit).
Vec observed_score(const PanelDataset& data, const EstimationIndex& index, const ParamSet& params,
                   double* loglik = nullptr);
Mat unit_scores(const PanelDataset& data, const ParamSet& params);

/// Packed positions of the parameters not sitting at the logit bound.
std::vector<int> unclamped_indices(const ParamSet& params);

/// Central-difference Jacobian of the observed score restricted to `coords`
/// (rows and columns), step max(1e-5, 1e-5 |theta_h|).
Mat score_jacobian(const PanelDataset& data, const EstimationIndex& index, const ParamSet& params,
                   const std::vector<int>& coords);

struct FitConfig {
  double tol_loglik = 1e-8;   // relative change
  double tol_param = 1e-5;    // max absolute change
  double tol_score = 1e-5;    // max-norm of the score after polishing
  int max_iter = 1000;
  int n_starts = 20;
  std::uint64_t seed = 1;
  double start_dispersion = 1.0;
  bool polish = true;
  int max_polish = 100;
  bool canonicalize = true;
  double decrease_slack = 1e-8;
  /// When set, the first start is quantile_start instead of random.
  bool data_start = false;
  /// Every start first runs screen_iter EM iterations; only the keep_starts
  /// best of them (plus the warm starts) are iterated to convergence.
  /// screen_iter = 0 runs every start to convergence.
  int screen_iter = 100;
  int keep_starts = 3;
  LogitFitOptions logit;
  /// Extra starting values tried before the random ones.
  std::vector<ParamSet> warm_starts;
};

struct StartSummary {
  int start = 0;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool screened_out = false;
  std::string error;
};

struct FitResult {
  ParamSet params;
  ModelSpec spec;
  double loglik = 0.0;
  std::vector<double> trace;
  int iterations = 0;
  int polish_steps = 0;
  bool converged = false;
  bool canonical = true;  // state labels sorted by the canonical rule
  bool clamped = false;
  double score_norm = 0.0;  // over the parameters not at the bound
  int n_par = 0;
  int n_units = 0;
  int best_start = 0;
  std::vector<StartSummary> starts;
};

/// Random starting value: latent logits uniform in [-d, d] with the pins
/// kept, RS coefficients uniform, AWR logits from the marginal response
/// frequencies plus uniform noise.
ParamSet random_start(const PanelDataset& data, const ModelSpec& spec, double dispersion,
                      std::uint64_t seed);

/// Deterministic start: occasions are split into k equal-size classes by
/// their summed rescaled responses; AWR pmfs, initial and transition logits
/// come from the class frequencies, RS pmfs start uniform and the RS
/// indicator starts persistent.
ParamSet quantile_start(const PanelDataset& data, const ModelSpec& spec);

/// Runs EM (then the Newton polish) from one start. Throws on a likelihood
/// decrease beyond the slack.
FitResult fit_from(const PanelDataset& data, ParamSet start, const FitConfig& config);

/// Multi-start fit; the best log-likelihood wins.
FitResult fit(const PanelDataset& data, const ModelSpec& spec, const FitConfig& config = {});

/// Independence model (k = 1, no RS component) by closed-form frequencies.
FitResult fit_null(const PanelDataset& data);

std::string fit_to_json(const FitResult& fit, const CovariateNames& names = {});
FitResult fit_from_json(const std::string& text);
std::string trace_csv(const FitResult& fit);

/// Per-start seed derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rshmm
