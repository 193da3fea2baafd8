// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "rshmm/latent_model.hpp"
#include "rshmm/observation_model.hpp"

namespace rshmm {

/// Which probability block a parameter belongs to.
enum class BlockKind { InitL, InitU, TransL, TransU, ObsRS, ObsAWR };
std::string to_string(BlockKind kind);

/// Covariate names used when labeling slopes.
struct CovariateNames {
  std::vector<std::string> x_L, x_U, z_L, z_U;
};

struct BlockRef {
  BlockKind kind;
  int index;   // previous state (TransL), RS block (TransU), l * r + j (obs)
  int offset;  // position of the block's first free parameter
  int size;
};

/// The full parameter vector: latent blocks plus observation blocks.
/// Packing order: init_L, init_U, trans_L[0..k), trans_U[...], rs[l*r+j],
/// awr[l*r+j].
struct ParamSet {
  LatentParams latent;
  ObservationParams obs;

  static ParamSet make(const ModelSpec& spec, const ModelDims& dims);

  const ModelSpec& spec() const { return latent.spec; }
  const ModelDims& dims() const { return latent.dims; }

  std::vector<BlockRef> layout() const;
  std::vector<const LogitBlock*> blocks() const;
  std::vector<LogitBlock*> blocks();

  int size() const;
  Vec pack() const;
  void unpack(const VecRef& theta);

  /// Qualified names, e.g. "pi_L_trans[2].intercept[1]" (1-based).
  std::vector<std::string> names(const CovariateNames& cov = {}) const;
  /// Group label of a block, e.g. "pi_L_trans[2]" or "f_RS[1,2]".
  std::string block_label(const BlockRef& ref) const;

  /// Mask of free parameters sitting at the logit bound.
  std::vector<bool> clamped_mask(double bound = kLogitBound) const;
  void clamp(double bound = kLogitBound);
};

/// Relabels the construct states: new state m is old state perm[m].
/// Returns false (leaving `out` unspecified) when the pinned families
/// cannot represent the relabeled model.
bool relabel_states(const ParamSet& params, const std::vector<int>& perm, ParamSet& out);

/// Canonical state order: ascending AWR-regime expected value of response 1,
/// ties by response 2. Returns the permutation applied (identity when the
/// family could not be relabeled, `relabeled` false).
std::vector<int> canonical_order(const ParamSet& params);
bool canonicalize(ParamSet& params);

/// Embeds a restricted model's parameters into a more general family with
/// the same k (nested warm start). Returns false if not representable.
bool embed(const ParamSet& restricted, ParamSet& general);

/// AWR-regime expected value (1-based categories) of response j in state l.
double awr_expected_value(const ParamSet& params, int l, int j);

/// Serialization of the grouped parameter layout.
std::string params_to_json(const ParamSet& params, const CovariateNames& cov = {});
ParamSet params_from_json(const std::string& text);

/// Long CSV of all conditional pmfs: regime,state,response,category,prob.
std::string pmf_table_csv(const ParamSet& params);

}  // namespace rshmm
