// SPDX-License-Identifier: Apache-2.0
#include "rshmm/hmm_core.hpp"

#include <cmath>

#include "rshmm/error.hpp"

namespace rshmm {

ModelCache ModelCache::build(const ParamSet& params, const PanelDataset& data,
                             const EstimationIndex& index) {
  if (!(params.dims() == data.dims()))
    raise(ErrorCode::DimensionMismatch, "parameters do not match the data dimensions");
  ModelCache c;
  c.emissions = EmissionTable(params.obs);
  const int p1L = static_cast<int>(data.x_L.cols());
  const int p2L = static_cast<int>(data.z_L.cols());
  const auto& ij = index.init_joint.rows;
  for (int g = 0; g < ij.rows(); ++g) {
    const Vec row = ij.row(g).transpose();
    c.init.push_back(initial_joint(params.latent, row.head(p1L), row.tail(row.size() - p1L)));
  }
  const auto& tj = index.trans_joint.rows;
  for (int g = 0; g < tj.rows(); ++g) {
    const Vec row = tj.row(g).transpose();
    c.kernels.push_back(bivariate_kernel(params.latent, row.head(p2L), row.tail(row.size() - p2L)));
  }
  return c;
}

ForwardBackwardResult forward_backward(const PanelDataset& data, const EstimationIndex& index,
                                       const ModelCache& cache, int i) {
  const int T = data.T;
  const int S = cache.emissions.states();
  ForwardBackwardResult fb;
  fb.alpha.resize(T, S);
  fb.beta.resize(T, S);
  fb.emission.resize(T, S);
  fb.log_m.resize(T);
  fb.shift.resize(T);

  Vec le(S);
  for (int t = 0; t < T; ++t) {
    cache.emissions.log_emission(data.y_row(i, t), le);
    fb.shift[t] = le.maxCoeff();
    fb.emission.row(t) = (le.array() - fb.shift[t]).exp().transpose();
  }

  Vec a = cache.initial(index, i).cwiseProduct(fb.emission.row(0).transpose());
  for (int t = 0;; ++t) {
    const double m = a.sum();
    if (!(m > 0.0) || !std::isfinite(m))
      raise(ErrorCode::NumericalFailure, "zero forward normalizer for unit " + data.unit_ids[i]);
    fb.log_m[t] = std::log(m);
    fb.alpha.row(t) = (a / m).transpose();
    if (t + 1 == T) break;
    const Mat& gamma = cache.kernel(index, T, i, t + 1);
    a = (fb.alpha.row(t) * gamma).transpose().cwiseProduct(fb.emission.row(t + 1).transpose());
  }
  fb.loglik = fb.log_m.sum() + fb.shift.sum();

  fb.beta.row(T - 1).setOnes();
  for (int t = T - 2; t >= 0; --t) {
    const Mat& gamma = cache.kernel(index, T, i, t + 1);
    const Vec eb = fb.emission.row(t + 1).transpose().cwiseProduct(fb.beta.row(t + 1).transpose());
    fb.beta.row(t) = (gamma * eb).transpose() / std::exp(fb.log_m[t + 1]);
  }
  return fb;
}

ForwardBackwardResult forward_backward(const PanelDataset& data, const ParamSet& params, int i) {
  const auto index = index_for_estimation(data);
  const auto cache = ModelCache::build(params, data, index);
  return forward_backward(data, index, cache, i);
}

LatentPosteriors posteriors(const PanelDataset& data, const EstimationIndex& index,
                            const ModelCache& cache) {
  LatentPosteriors post;
  post.n = data.n;
  post.T = data.T;
  post.S = cache.emissions.states();
  const int S = post.S, T = data.T;
  post.delta1.assign(static_cast<std::size_t>(data.n) * T * S, 0.0);
  post.delta2.assign(static_cast<std::size_t>(data.n) * (T - 1) * S * S, 0.0);
  post.unit_loglik = Vec::Zero(data.n);

  bool failed = false;
  std::string failure;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < data.n; ++i) {
    ForwardBackwardResult fb;
    try {
      fb = forward_backward(data, index, cache, i);
    } catch (const Error& e) {
#pragma omp critical
      {
        failed = true;
        failure = e.what();
      }
      continue;
    }
    post.unit_loglik[i] = fb.loglik;
    for (int t = 0; t < T; ++t) {
      double* d1 = &post.delta1[(static_cast<std::size_t>(i) * T + t) * S];
      double sum = 0.0;
      for (int s = 0; s < S; ++s) sum += d1[s] = fb.alpha(t, s) * fb.beta(t, s);
      for (int s = 0; s < S; ++s) d1[s] /= sum;
      if (t == 0) continue;
      const Mat& gamma = cache.kernel(index, T, i, t);
      double* d2 = &post.delta2[(static_cast<std::size_t>(i) * (T - 1) + t - 1) * S * S];
      const double inv_m = std::exp(-fb.log_m[t]);
      double tot = 0.0;
      for (int sb = 0; sb < S; ++sb)
        for (int s = 0; s < S; ++s)
          tot += d2[sb * S + s] =
              fb.alpha(t - 1, sb) * gamma(sb, s) * fb.emission(t, s) * fb.beta(t, s) * inv_m;
      for (int q = 0; q < S * S; ++q) d2[q] /= tot;
    }
  }
  if (failed) raise(ErrorCode::NumericalFailure, failure);
  post.loglik = post.unit_loglik.sum();
  return post;
}

LatentPosteriors posteriors(const PanelDataset& data, const ParamSet& params) {
  const auto index = index_for_estimation(data);
  return posteriors(data, index, ModelCache::build(params, data, index));
}

double log_likelihood(const PanelDataset& data, const EstimationIndex& index, const ModelCache& cache,
                      Vec* unit_loglik) {
  Vec ll = Vec::Zero(data.n);
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < data.n; ++i) {
    try {
      ll[i] = forward_backward(data, index, cache, i).loglik;
    } catch (const Error&) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) raise(ErrorCode::NumericalFailure, "forward recursion failed");
  if (unit_loglik) *unit_loglik = ll;
  return ll.sum();
}

double log_likelihood(const PanelDataset& data, const ParamSet& params) {
  const auto index = index_for_estimation(data);
  return log_likelihood(data, index, ModelCache::build(params, data, index));
}

int response_config_count(const std::vector<int>& categories) {
  long long c = 1;
  for (int cj : categories) {
    c *= cj;
    if (c > 10'000'000) raise(ErrorCode::Unsupported, "too many response configurations");
  }
  return static_cast<int>(c);
}

std::vector<int> decode_response_config(const std::vector<int>& categories, int index) {
  std::vector<int> y(categories.size());
  for (int j = static_cast<int>(categories.size()) - 1; j >= 0; --j) {
    y[j] = index % categories[j];
    index /= categories[j];
  }
  return y;
}

int encode_response_config(const std::vector<int>& categories, std::span<const int> y) {
  int index = 0;
  for (std::size_t j = 0; j < categories.size(); ++j) index = index * categories[j] + y[j];
  return index;
}

Mat emission_grid(const ParamSet& params) {
  const auto& cats = params.dims().categories;
  const int C = response_config_count(cats);
  const EmissionTable table(params.obs);
  Mat grid(table.states(), C);
  Vec le(table.states());
  for (int q = 0; q < C; ++q) {
    const auto y = decode_response_config(cats, q);
    table.log_emission(y, le);
    grid.col(q) = le.array().exp();
  }
  return grid;
}

namespace {

Vec conditional_from(const ForwardBackwardResult& fb, const ModelCache& cache,
                     const EstimationIndex& index, const Mat& grid, int T, int i, int t) {
  Vec v;
  if (t == 0)
    v = cache.initial(index, i);
  else
    v = (fb.alpha.row(t - 1) * cache.kernel(index, T, i, t)).transpose();
  v = v.cwiseProduct(fb.beta.row(t).transpose());
  Vec pmf = grid.transpose() * v;
  return pmf / pmf.sum();
}

}  // namespace

Vec full_conditional_pmf(const PanelDataset& data, const ParamSet& params, int i, int t) {
  if (i < 0 || i >= data.n || t < 0 || t >= data.T)
    raise(ErrorCode::InvalidArgument, "unit or occasion out of range");
  const auto index = index_for_estimation(data);
  const auto cache = ModelCache::build(params, data, index);
  const auto fb = forward_backward(data, index, cache, i);
  return conditional_from(fb, cache, index, emission_grid(params), data.T, i, t);
}

Mat full_conditional_pmfs(const PanelDataset& data, const ParamSet& params) {
  const auto index = index_for_estimation(data);
  const auto cache = ModelCache::build(params, data, index);
  const Mat grid = emission_grid(params);
  Mat out(static_cast<Eigen::Index>(data.n) * data.T, grid.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < data.n; ++i) {
    const auto fb = forward_backward(data, index, cache, i);
    for (int t = 0; t < data.T; ++t)
      out.row(i * data.T + t) = conditional_from(fb, cache, index, grid, data.T, i, t).transpose();
  }
  return out;
}

}  // namespace rshmm
