// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "rshmm/logit_block.hpp"

namespace rshmm {

/// Weighted multinomial likelihood sum_r sum_m W(r, m) log p_m(X.row(r)).
/// Rows are covariate configurations, weights are expected counts.
struct WeightedLogitProblem {
  Mat X;  // rows x p (p may be 0)
  Mat W;  // rows x ncat

  static WeightedLogitProblem intercept_only(const VecRef& counts);
};

struct LogitFitOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double bound = kLogitBound;
  int max_halvings = 30;
};

struct LogitFitReport {
  double loglik = 0.0;
  bool converged = false;
  bool clamped = false;        // some parameter ended at the bound
  bool singular_step = false;  // a ridge-damped step was needed
  bool flat_scores = false;    // scores unidentified (no covariate signal)
  bool skipped = false;        // zero total weight, parameters untouched
  int iterations = 0;
  double grad_norm = 0.0;      // max-norm over the parameters left free
  std::vector<int> degenerate; // categories frozen for lack of weight
};

double weighted_loglik(const LogitBlock& block, const WeightedLogitProblem& prob);
Vec weighted_gradient(const LogitBlock& block, const WeightedLogitProblem& prob);

/// Negative Hessian of the weighted log-likelihood over the free parameters.
Mat weighted_neg_hessian(const LogitBlock& block, const WeightedLogitProblem& prob);

/// Maximizes the weighted log-likelihood starting from the current value of
/// `block`. Families with free scores are routed to fit_stereotype.
LogitFitReport fit_weighted_logit(LogitBlock& block, const WeightedLogitProblem& prob,
                                  const LogitFitOptions& opts = {});

/// Bilinear score model: alternates a coefficient step (scores fixed) and a
/// score step (coefficients fixed); a joint Newton step is taken whenever the
/// full negative Hessian is positive definite.
LogitFitReport fit_stereotype(LogitBlock& block, const WeightedLogitProblem& prob,
                              const LogitFitOptions& opts = {});

/// Saturated adjacent-category block fitted by weighted relative frequencies
/// with a floor on empty cells. Keeps the current value when it is better.
LogitFitReport fit_frequencies(LogitBlock& block, const VecRef& counts, double floor = 1e-10,
                               double bound = kLogitBound);

}  // namespace rshmm
