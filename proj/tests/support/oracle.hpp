// SPDX-License-Identifier: Apache-2.0
#pragma once

// Brute-force reference computations for small instances. Probabilities are
// rebuilt from the raw coefficients and every latent path is enumerated in
// long double, so nothing here goes through the scaled recursions.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rshmm/hmm_core.hpp"

namespace oracle {

using rshmm::PanelDataset;
using rshmm::ParamSet;

struct Instance {
  PanelDataset data;
  ParamSet params;
};

/// Baseline latent blocks, heterogeneous RS transitions, one covariate per
/// block drawn from {0, 1}, responses uniform, parameters uniform in
/// [-spread, spread].
inline Instance random_instance(std::uint64_t seed, int k, std::vector<int> categories, int T, int n,
                                double spread = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-spread, spread);
  std::bernoulli_distribution coin(0.5);
  Instance inst;
  const int p = 1;
  inst.data = PanelDataset::shaped(n, T, categories, p, p, p, p);
  auto& d = inst.data;
  for (int i = 0; i < n; ++i) {
    d.x_L(i, 0) = coin(rng);
    d.x_U(i, 0) = coin(rng);
    for (int t = 0; t < T; ++t) {
      d.z_L(i * T + t, 0) = coin(rng);
      d.z_U(i * T + t, 0) = coin(rng);
      for (int j = 0; j < d.r(); ++j)
        d.y_at(i, t, j) = std::uniform_int_distribution<int>(0, categories[j] - 1)(rng);
    }
  }
  rshmm::ModelSpec spec;
  spec.k = k;
  inst.params = ParamSet::make(spec, d.dims());
  rshmm::Vec theta(inst.params.size());
  for (int h = 0; h < theta.size(); ++h) theta[h] = unif(rng);
  inst.params.unpack(theta);
  return inst;
}

inline std::vector<long double> softmax(const std::vector<long double>& eta) {
  long double mx = eta[0];
  for (auto v : eta) mx = std::max(mx, v);
  long double z = 0;
  std::vector<long double> out(eta.size());
  for (std::size_t m = 0; m < eta.size(); ++m) z += out[m] = std::exp(eta[m] - mx);
  for (auto& v : out) v /= z;
  return out;
}

/// Baseline block: eta_m = intercept_m + slopes_m' x.
inline std::vector<long double> baseline_probs(const rshmm::LogitBlock& b, const rshmm::Vec& x) {
  std::vector<long double> eta(b.ncat);
  for (int m = 0; m < b.ncat; ++m) {
    long double v = b.intercept[m];
    for (int h = 0; h < b.p; ++h) v += static_cast<long double>(b.slopes(m, h)) * x[h];
    eta[m] = v;
  }
  return softmax(eta);
}

inline int style_score(int c, int y) {  // y 1-based
  const long double mid = c / 2.0L;
  return y < mid ? 1 : (y == mid ? 0 : -1);
}

inline std::vector<long double> rs_probs(int c, long double phi0, long double phi1) {
  std::vector<long double> eta(c, 0.0L);
  long double cum = 0;
  for (int y = 2; y <= c; ++y) {
    cum += style_score(c, y - 1);
    eta[y - 1] = phi0 * (y - 1) + phi1 * cum;
  }
  return softmax(eta);
}

inline std::vector<long double> awr_probs(const rshmm::Vec& phi) {
  std::vector<long double> eta(phi.size() + 1, 0.0L);
  for (int y = 1; y < static_cast<int>(eta.size()); ++y) eta[y] = eta[y - 1] + phi[y - 1];
  return softmax(eta);
}

struct Probabilities {
  int k = 0, S = 0, T = 0;
  std::vector<long double> init;                 // S
  std::vector<std::vector<long double>> kernel;  // t = 1..T-1, S x S flattened
  std::vector<std::vector<long double>> emit;    // t, S
};

/// Joint state s = u k + l, u = 0 RS, u = 1 AWR.
inline Probabilities unit_probabilities(const PanelDataset& d, const ParamSet& ps, int i) {
  const auto& lat = ps.latent;
  const auto& obs = ps.obs;
  Probabilities pr;
  const int k = ps.spec().k, S = 2 * k, T = d.T;
  pr.k = k;
  pr.S = S;
  pr.T = T;
  const auto pL = baseline_probs(lat.init_L, d.x_L.row(i).transpose());
  const auto pU = baseline_probs(lat.init_U, d.x_U.row(i).transpose());
  pr.init.resize(S);
  for (int u = 0; u < 2; ++u)
    for (int l = 0; l < k; ++l) pr.init[u * k + l] = pU[u] * pL[l];
  pr.kernel.assign(T, std::vector<long double>(S * S, 0.0L));
  for (int t = 1; t < T; ++t) {
    const rshmm::Vec zL = d.z_L.row(i * T + t).transpose();
    const rshmm::Vec zU = d.z_U.row(i * T + t).transpose();
    for (int ub = 0; ub < 2; ++ub)
      for (int lb = 0; lb < k; ++lb) {
        const auto rowL = baseline_probs(lat.trans_L[lb], zL);
        for (int l = 0; l < k; ++l) {
          const auto rowU = baseline_probs(lat.trans_U[ps.spec().rs_block_index(l, ub)], zU);
          for (int u = 0; u < 2; ++u) pr.kernel[t][(ub * k + lb) * S + u * k + l] = rowL[l] * rowU[u];
        }
      }
  }
  pr.emit.assign(T, std::vector<long double>(S, 1.0L));
  for (int t = 0; t < T; ++t)
    for (int l = 0; l < k; ++l)
      for (int j = 0; j < d.r(); ++j) {
        const int c = d.categories[j];
        const int y = d.y_at(i, t, j);
        const auto& rs = obs.rs_block(l, j).coef;
        pr.emit[t][l] *= rs_probs(c, rs[0], rs[1])[y];
        pr.emit[t][k + l] *= awr_probs(obs.awr_block(l, j).coef)[y];
      }
  return pr;
}

/// Calls f(path, weight) for every latent path with its joint probability
/// with the observed responses.
template <class F>
void for_each_path(const Probabilities& pr, F&& f) {
  const int S = pr.S, T = pr.T;
  std::vector<int> path(T, 0);
  long long total = 1;
  for (int t = 0; t < T; ++t) total *= S;
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    for (int t = T - 1; t >= 0; --t) {
      path[t] = static_cast<int>(c % S);
      c /= S;
    }
    long double w = pr.init[path[0]] * pr.emit[0][path[0]];
    for (int t = 1; t < T; ++t) w *= pr.kernel[t][path[t - 1] * S + path[t]] * pr.emit[t][path[t]];
    f(path, w);
  }
}

inline long double unit_likelihood(const PanelDataset& d, const ParamSet& ps, int i) {
  long double total = 0;
  for_each_path(unit_probabilities(d, ps, i), [&](const std::vector<int>&, long double w) { total += w; });
  return total;
}

inline long double log_likelihood(const PanelDataset& d, const ParamSet& ps) {
  long double ll = 0;
  for (int i = 0; i < d.n; ++i) ll += std::log(unit_likelihood(d, ps, i));
  return ll;
}

struct UnitPosteriors {
  std::vector<std::vector<long double>> d1;  // t, S
  std::vector<std::vector<long double>> d2;  // t >= 1, sbar * S + s
};

inline UnitPosteriors unit_posteriors(const PanelDataset& d, const ParamSet& ps, int i) {
  const auto pr = unit_probabilities(d, ps, i);
  const int S = pr.S, T = pr.T;
  UnitPosteriors out;
  out.d1.assign(T, std::vector<long double>(S, 0.0L));
  out.d2.assign(T, std::vector<long double>(S * S, 0.0L));
  long double total = 0;
  for_each_path(pr, [&](const std::vector<int>& path, long double w) {
    total += w;
    for (int t = 0; t < T; ++t) out.d1[t][path[t]] += w;
    for (int t = 1; t < T; ++t) out.d2[t][path[t - 1] * S + path[t]] += w;
  });
  for (auto& row : out.d1)
    for (auto& v : row) v /= total;
  for (auto& row : out.d2)
    for (auto& v : row) v /= total;
  return out;
}

/// P(Y_t = y | Y_-t) over all response configurations (first response most
/// significant), by enumeration of paths and of the configurations at t.
inline std::vector<long double> full_conditional(const PanelDataset& d, const ParamSet& ps, int i, int t) {
  const int C = rshmm::response_config_count(d.categories);
  std::vector<long double> joint(C, 0.0L);
  PanelDataset copy = d;
  for (int y = 0; y < C; ++y) {
    const auto cfg = rshmm::decode_response_config(d.categories, y);
    for (int j = 0; j < d.r(); ++j) copy.y_at(i, t, j) = cfg[j];
    joint[y] = unit_likelihood(copy, ps, i);
  }
  long double z = 0;
  for (auto v : joint) z += v;
  for (auto& v : joint) v /= z;
  return joint;
}

}  // namespace oracle
