// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rshmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;

/// Logit bound applied to every estimated logit parameter.
inline constexpr double kLogitBound = 20.0;

enum class LogitFamily {
  Baseline,  // eta_m = a_m + b_m' x
  Scored,    // eta_m = a_m + s_m (b' x), some scores pinned
  Design,    // eta_m = D_m' theta, no covariates
};

/// A categorical distribution parameterized by logits against a reference
/// category. Every probability block of the model (initial, transition,
/// response) is one of these.
///
/// Free parameters are packed in a fixed order:
///   Baseline: intercepts (non-reference categories ascending), then the
///             slope rows of the same categories.
///   Scored:   free scores, intercepts, shared slope vector.
///   Design:   the coefficient vector.
struct LogitBlock {
  LogitFamily family = LogitFamily::Baseline;
  int ncat = 1;
  int ref = 0;
  int p = 0;

  Vec intercept;                  // ncat, intercept[ref] == 0
  Mat slopes;                     // Baseline: ncat x p, row ref == 0
  Vec shared;                     // Scored: p
  Vec score;                      // Scored: ncat, score[ref] == 0
  std::vector<bool> score_fixed;  // Scored: pinned scores
  Mat design;                     // Design: ncat x q, row 0 == 0
  Vec coef;                       // Design: q

  static LogitBlock make_baseline(int ncat, int ref, int p);
  static LogitBlock make_scored(int ncat, int ref, int p, Vec scores,
                                std::vector<bool> fixed);
  static LogitBlock make_design(Mat design);

  int free_count() const;
  bool has_free_scores() const;

  void eta(const VecRef& x, Eigen::Ref<Vec> out) const;
  Vec log_probs(const VecRef& x) const;
  Vec probs(const VecRef& x) const;

  /// d eta / d theta over the free parameters (ncat x free_count).
  void eta_jacobian(const VecRef& x, Eigen::Ref<Mat> jac) const;

  /// Adds sum_m resid_m * d^2 eta_m / (d theta d theta') to h. Nonzero only
  /// for the bilinear score x slope terms of the Scored family.
  void add_eta_curvature(const VecRef& x, const VecRef& resid,
                         Eigen::Ref<Mat> h) const;

  Vec pack() const;
  void unpack(const VecRef& theta);

  /// Positions (within the packed vector) of the free scores and of the
  /// remaining coefficients.
  std::vector<int> score_positions() const;
  std::vector<int> coefficient_positions() const;

  /// Generic names of the free parameters, 1-based categories.
  std::vector<std::string> free_names(const std::vector<std::string>& covariates,
                                      const std::vector<std::string>& design_names = {}) const;

  void clamp(double bound = kLogitBound);
  bool at_bound(double bound = kLogitBound) const;
};

/// Writes into `target` (which carries the new reference category and score
/// pins) the same distribution as `src` after relabeling categories: new
/// category m is old category perm[m]. Returns false when the target family
/// cannot represent it (e.g. pinned scores that the relabeled scores violate).
bool relabel_into(const LogitBlock& src, const std::vector<int>& perm,
                  LogitBlock& target);

/// Numerically safe log-sum-exp normalization in place; returns the log
/// normalizer.
double log_normalize(Eigen::Ref<Vec> logits);

}  // namespace rshmm
