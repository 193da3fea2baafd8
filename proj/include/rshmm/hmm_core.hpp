// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "rshmm/panel_data.hpp"
#include "rshmm/param_set.hpp"

namespace rshmm {

/// Initial vectors and kernels evaluated once per covariate configuration,
/// plus the emission table, for one parameter value.
struct ModelCache {
  EmissionTable emissions;
  std::vector<Vec> init;     // per EstimationIndex::init_joint group
  std::vector<Mat> kernels;  // per EstimationIndex::trans_joint group

  static ModelCache build(const ParamSet& params, const PanelDataset& data,
                          const EstimationIndex& index);

  const Vec& initial(const EstimationIndex& index, int i) const {
    return init[index.init_joint.group_of[i]];
  }
  const Mat& kernel(const EstimationIndex& index, int T, int i, int t) const {
    return kernels[index.trans_joint.group_of[i * (T - 1) + t - 1]];
  }
};

/// Scaled recursions for one unit. alpha rows sum to 1; the emission of
/// occasion t is exp(log e - shift[t]); loglik = sum(log_m + shift).
struct ForwardBackwardResult {
  Mat alpha;     // T x S
  Mat beta;      // T x S
  Mat emission;  // T x S, shifted
  Vec log_m;     // T
  Vec shift;     // T
  double loglik = 0.0;
};

ForwardBackwardResult forward_backward(const PanelDataset& data, const EstimationIndex& index,
                                       const ModelCache& cache, int i);
ForwardBackwardResult forward_backward(const PanelDataset& data, const ParamSet& params, int i);

/// Smoothed state probabilities for all units. Joint states s = u k + l.
struct LatentPosteriors {
  int n = 0;
  int T = 0;
  int S = 0;
  std::vector<double> delta1;  // [(i T + t) S + s]
  std::vector<double> delta2;  // [((i (T-1) + t-1) S + sbar) S + s], t >= 1
  Vec unit_loglik;
  double loglik = 0.0;

  double d1(int i, int t, int s) const { return delta1[(static_cast<std::size_t>(i) * T + t) * S + s]; }
  double d2(int i, int t, int sbar, int s) const {
    return delta2[((static_cast<std::size_t>(i) * (T - 1) + t - 1) * S + sbar) * S + s];
  }
};

LatentPosteriors posteriors(const PanelDataset& data, const EstimationIndex& index,
                            const ModelCache& cache);
LatentPosteriors posteriors(const PanelDataset& data, const ParamSet& params);

double log_likelihood(const PanelDataset& data, const EstimationIndex& index, const ModelCache& cache,
                      Vec* unit_loglik = nullptr);
double log_likelihood(const PanelDataset& data, const ParamSet& params);

/// Response configurations: index = sum_j y_j * stride_j with the first
/// response most significant, y_j 0-based.
int response_config_count(const std::vector<int>& categories);
std::vector<int> decode_response_config(const std::vector<int>& categories, int index);
int encode_response_config(const std::vector<int>& categories, std::span<const int> y);

/// Emission probability of every response configuration per joint state
/// (S x C).
Mat emission_grid(const ParamSet& params);

/// Distribution of the whole response vector at occasion t given the
/// covariates and the responses of every other occasion.
Vec full_conditional_pmf(const PanelDataset& data, const ParamSet& params, int i, int t);

/// All full-conditional pmfs, row i * T + t.
Mat full_conditional_pmfs(const PanelDataset& data, const ParamSet& params);

}  // namespace rshmm
