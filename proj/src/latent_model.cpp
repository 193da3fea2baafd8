// SPDX-License-Identifier: Apache-2.0
#include "rshmm/latent_model.hpp"

#include <string>

#include "rshmm/error.hpp"

namespace rshmm {

namespace {

void check_len(const VecRef& v, int expected, const char* what) {
  if (v.size() != expected)
    raise(ErrorCode::DimensionMismatch, std::string(what) + " has length " +
                                            std::to_string(v.size()) + ", expected " +
                                            std::to_string(expected));
}

void check_state(int s, int n, const char* what) {
  if (s < 0 || s >= n)
    raise(ErrorCode::InvalidState, std::string(what) + " out of range: " + std::to_string(s));
}

}  // namespace

LogitBlock make_init_L_block(const ModelSpec& spec, int p) {
  const int k = spec.k;
  if (k == 1) return LogitBlock::make_baseline(1, 0, 0);
  switch (spec.effective_init_form()) {
    case InitForm::Baseline:
      return LogitBlock::make_baseline(k, 0, p);
    case InitForm::Stereotype: {
      Vec mu = Vec::LinSpaced(k, 0.0, k - 1.0);
      std::vector<bool> fixed(k, false);
      fixed[0] = fixed[1] = true;  // mu_1 = 0, mu_2 = 1
      return LogitBlock::make_scored(k, 0, p, mu, fixed);
    }
    case InitForm::ParallelAdjacent:
      return LogitBlock::make_scored(k, 0, p, Vec::LinSpaced(k, 0.0, k - 1.0),
                                     std::vector<bool>(k, true));
  }
  return {};
}

LogitBlock make_trans_L_block(const ModelSpec& spec, int p, int lbar) {
  const int k = spec.k;
  if (k == 1) return LogitBlock::make_baseline(1, 0, 0);
  switch (spec.effective_trans_form()) {
    case TransForm::Baseline:
      return LogitBlock::make_baseline(k, lbar, p);
    case TransForm::Stereotype: {
      std::vector<bool> fixed(k, false);
      fixed[lbar == 0 ? 1 : 0] = true;
      return LogitBlock::make_scored(k, lbar, p, Vec::Ones(k), fixed);
    }
    case TransForm::ParallelBaseline:
      return LogitBlock::make_scored(k, lbar, p, Vec::Ones(k), std::vector<bool>(k, true));
    case TransForm::ParallelAdjacent: {
      // Scores linear in the state, zero at lbar, one at the pinned state.
      Vec nu(k);
      for (int l = 0; l < k; ++l)
        nu[l] = lbar == 0 ? static_cast<double>(l)
                          : static_cast<double>(lbar - l) / static_cast<double>(lbar);
      return LogitBlock::make_scored(k, lbar, p, nu, std::vector<bool>(k, true));
    }
  }
  return {};
}

LatentParams LatentParams::make(const ModelSpec& spec, const ModelDims& dims) {
  spec.validate();
  LatentParams lp;
  lp.spec = spec;
  lp.dims = dims;
  lp.init_L = make_init_L_block(spec, dims.p1_L);
  for (int lbar = 0; lbar < spec.k; ++lbar)
    lp.trans_L.push_back(make_trans_L_block(spec, dims.p2_L, lbar));
  if (spec.has_rs) {
    lp.init_U = LogitBlock::make_baseline(2, 0, dims.p1_U);
    const int p = spec.rs_uses_covariates() ? dims.p2_U : 0;
    for (int b = 0; b < spec.rs_block_count(); ++b)
      lp.trans_U.push_back(LogitBlock::make_baseline(2, 0, p));
  }
  return lp;
}

Vec initial_probs_L(const LatentParams& params, const VecRef& x_L) {
  check_len(x_L, params.dims.p1_L, "x_L");
  return params.init_L.probs(x_L.head(params.init_L.p));
}

Vec initial_probs_U(const LatentParams& params, const VecRef& x_U) {
  if (!params.spec.has_rs) raise(ErrorCode::InvalidArgument, "model has no RS component");
  check_len(x_U, params.dims.p1_U, "x_U");
  return params.init_U.probs(x_U);
}

Vec transition_probs_L(const LatentParams& params, const VecRef& z_L, int lbar) {
  check_len(z_L, params.dims.p2_L, "z_L");
  check_state(lbar, params.spec.k, "previous construct state");
  const auto& block = params.trans_L[lbar];
  return block.probs(z_L.head(block.p));
}

Vec transition_probs_U(const LatentParams& params, const VecRef& z_U, int l, int ubar) {
  if (!params.spec.has_rs) raise(ErrorCode::InvalidArgument, "model has no RS component");
  check_len(z_U, params.dims.p2_U, "z_U");
  check_state(l, params.spec.k, "construct state");
  check_state(ubar, 2, "previous RS state");
  const int b = params.spec.rs_block_index(l, ubar);
  if (b < 0) {
    Vec d = Vec::Zero(2);
    d[ubar] = 1.0;
    return d;
  }
  const auto& block = params.trans_U[b];
  return block.probs(z_U.head(block.p));
}

Vec initial_joint(const LatentParams& params, const VecRef& x_L, const VecRef& x_U) {
  const Vec pl = initial_probs_L(params, x_L);
  if (!params.spec.has_rs) return pl;
  const Vec pu = initial_probs_U(params, x_U);
  const int k = params.spec.k;
  Vec out(2 * k);
  for (int u = 0; u < 2; ++u)
    for (int l = 0; l < k; ++l) out[u * k + l] = pu[u] * pl[l];
  return out;
}

Mat bivariate_kernel(const LatentParams& params, const VecRef& z_L, const VecRef& z_U) {
  const int k = params.spec.k;
  Mat trans_l(k, k);
  for (int lbar = 0; lbar < k; ++lbar)
    trans_l.row(lbar) = transition_probs_L(params, z_L, lbar).transpose();
  if (!params.spec.has_rs) return trans_l;

  // rs(l, ubar) = P(U_t = AWR | L_t = l, U_{t-1} = ubar)
  Mat rs_awr(k, 2);
  for (int l = 0; l < k; ++l)
    for (int ubar = 0; ubar < 2; ++ubar)
      rs_awr(l, ubar) = transition_probs_U(params, z_U, l, ubar)[1];

  Mat out(2 * k, 2 * k);
  for (int ubar = 0; ubar < 2; ++ubar)
    for (int lbar = 0; lbar < k; ++lbar)
      for (int u = 0; u < 2; ++u)
        for (int l = 0; l < k; ++l) {
          const double pu = u == 1 ? rs_awr(l, ubar) : 1.0 - rs_awr(l, ubar);
          out(ubar * k + lbar, u * k + l) = pu * trans_l(lbar, l);
        }
  return out;
}

}  // namespace rshmm
