// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "rshmm/logit_block.hpp"
#include "rshmm/model_spec.hpp"

namespace rshmm {

/// Parameters of the bivariate latent chain (construct L, RS indicator U).
/// Construct states are 0..k-1; U = 0 is the RS regime, U = 1 is AWR.
struct LatentParams {
  ModelSpec spec;
  ModelDims dims;
  LogitBlock init_L;                // k categories, reference state 0
  LogitBlock init_U;                // 2 categories, reference RS
  std::vector<LogitBlock> trans_L;  // one per previous state, reference = it
  std::vector<LogitBlock> trans_U;  // spec.rs_block_count() binary logits

  static LatentParams make(const ModelSpec& spec, const ModelDims& dims);
};

/// Fresh, zero-valued blocks with the pins of each family.
LogitBlock make_init_L_block(const ModelSpec& spec, int p);
LogitBlock make_trans_L_block(const ModelSpec& spec, int p, int lbar);

Vec initial_probs_L(const LatentParams& params, const VecRef& x_L);
Vec initial_probs_U(const LatentParams& params, const VecRef& x_U);
Vec transition_probs_L(const LatentParams& params, const VecRef& z_L, int lbar);
Vec transition_probs_U(const LatentParams& params, const VecRef& z_U, int l, int ubar);

/// Joint initial distribution over s = u k + l (product form).
Vec initial_joint(const LatentParams& params, const VecRef& x_L, const VecRef& x_U);

/// Row-stochastic joint kernel, rows indexed by the previous joint state.
Mat bivariate_kernel(const LatentParams& params, const VecRef& z_L, const VecRef& z_U);

}  // namespace rshmm
