// SPDX-License-Identifier: Apache-2.0
#include "rshmm/logit_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rshmm/error.hpp"
#include "rshmm/observation_model.hpp"

namespace rshmm {

namespace {

struct Eval {
  double ll = 0.0;
  Vec g;
  Mat h;
};

void check_problem(const LogitBlock& block, const WeightedLogitProblem& prob) {
  if (prob.W.cols() != block.ncat)
    raise(ErrorCode::DimensionMismatch, "weight columns must equal the category count");
  if (prob.X.rows() != prob.W.rows())
    raise(ErrorCode::DimensionMismatch, "design and weight row counts differ");
  if (block.family != LogitFamily::Design && prob.X.cols() != block.p)
    raise(ErrorCode::DimensionMismatch, "design columns must equal the covariate count");
  if (!prob.W.allFinite() || (prob.W.array() < 0.0).any())
    raise(ErrorCode::NonFiniteWeights, "weights must be finite and nonnegative");
}

VecRef row_of(const WeightedLogitProblem& prob, int r, Vec& buf) {
  buf = prob.X.row(r).transpose();
  return buf;
}

Eval evaluate(const LogitBlock& b, const WeightedLogitProblem& prob, bool want_h) {
  const int nfree = b.free_count();
  Eval e;
  e.g = Vec::Zero(nfree);
  if (want_h) e.h = Mat::Zero(nfree, nfree);
  Vec eta(b.ncat), x, resid(b.ncat);
  Mat jac(b.ncat, nfree);
  for (int r = 0; r < prob.W.rows(); ++r) {
    const double wr = prob.W.row(r).sum();
    if (wr <= 0.0) continue;
    const VecRef xr = row_of(prob, r, x);
    b.eta(xr, eta);
    log_normalize(eta);
    for (int m = 0; m < b.ncat; ++m)
      if (prob.W(r, m) > 0.0) e.ll += prob.W(r, m) * eta[m];
    const Vec pi = eta.array().exp();
    resid = prob.W.row(r).transpose() - wr * pi;
    b.eta_jacobian(xr, jac);
    e.g.noalias() += jac.transpose() * resid;
    if (want_h) {
      Mat a = -wr * pi * pi.transpose();
      a.diagonal() += wr * pi;
      e.h.noalias() += jac.transpose() * a * jac;
      b.add_eta_curvature(xr, -resid, e.h);
    }
  }
  return e;
}

double total_weight(const WeightedLogitProblem& prob) { return prob.W.sum(); }

// Free-parameter positions that belong to category m alone.
std::vector<int> category_params(const LogitBlock& b, int m) {
  std::vector<int> out;
  if (m == b.ref) return out;
  int q = 0;
  for (int c = 0; c < m; ++c) q += c != b.ref ? 1 : 0;
  if (b.family == LogitFamily::Baseline) {
    out.push_back(q);
    for (int h = 0; h < b.p; ++h) out.push_back((b.ncat - 1) + q * b.p + h);
  } else if (b.family == LogitFamily::Scored) {
    int nscore = 0, score_pos = -1;
    for (int c = 0; c < b.ncat; ++c) {
      if (b.score_fixed[c]) continue;
      if (c == m) score_pos = nscore;
      ++nscore;
    }
    if (score_pos >= 0) out.push_back(score_pos);
    out.push_back(nscore + q);
  }
  return out;
}

enum class StepResult { Moved, Stalled, NotPositiveDefinite };

// Effective active set: movable and not pinned against the bound by the
// gradient.
std::vector<int> active_set(const Vec& theta, const Vec& g, const std::vector<bool>& movable,
                            double bound) {
  std::vector<int> a;
  for (int h = 0; h < theta.size(); ++h) {
    if (!movable[h]) continue;
    const bool at_upper = theta[h] >= bound - 1e-9 && g[h] > 0.0;
    const bool at_lower = theta[h] <= -bound + 1e-9 && g[h] < 0.0;
    if (!at_upper && !at_lower) a.push_back(h);
  }
  return a;
}

StepResult newton_step(LogitBlock& b, const WeightedLogitProblem& prob, const LogitFitOptions& opts,
                       const std::vector<bool>& movable, const Eval& cur, bool allow_ridge,
                       LogitFitReport& rep) {
  const Vec theta0 = b.pack();
  const auto a = active_set(theta0, cur.g, movable, opts.bound);
  if (a.empty()) return StepResult::Stalled;
  const int na = static_cast<int>(a.size());
  Mat h(na, na);
  Vec g(na);
  for (int i = 0; i < na; ++i) {
    g[i] = cur.g[a[i]];
    for (int j = 0; j < na; ++j) h(i, j) = cur.h(a[i], a[j]);
  }
  const double scale = std::max(1e-300, h.diagonal().cwiseAbs().maxCoeff());
  Eigen::LDLT<Mat> ldlt(h);
  auto positive = [&](const Eigen::LDLT<Mat>& f) {
    return f.info() == Eigen::Success && f.vectorD().minCoeff() > 1e-12 * scale;
  };
  if (!positive(ldlt)) {
    if (!allow_ridge) return StepResult::NotPositiveDefinite;
    rep.singular_step = true;
    double lambda = 1e-8 * (1.0 + scale);
    for (int tries = 0; tries < 40; ++tries, lambda *= 10.0) {
      Mat hr = h;
      hr.diagonal().array() += lambda;
      ldlt.compute(hr);
      if (positive(ldlt)) break;
    }
    if (!positive(ldlt)) return StepResult::Stalled;
  }
  const Vec d = ldlt.solve(g);
  // Near the optimum the predicted gain drops below the rounding noise of the
  // log-likelihood, and a full Newton step is taken on the gradient alone.
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(cur.ll) + 1.0);
  const bool in_noise = 0.5 * g.dot(d) < noise;
  double step = 1.0;
  for (int halving = 0; halving <= opts.max_halvings; ++halving, step *= 0.5) {
    Vec theta = theta0;
    for (int i = 0; i < na; ++i)
      theta[a[i]] = std::clamp(theta0[a[i]] + step * d[i], -opts.bound, opts.bound);
    b.unpack(theta);
    const double ll = weighted_loglik(b, prob);
    if (halving == 0 && in_noise && std::isfinite(ll) && ll >= cur.ll - noise && theta != theta0)
      return StepResult::Moved;
    if (std::isfinite(ll) && ll >= cur.ll) return ll > cur.ll ? StepResult::Moved : StepResult::Stalled;
  }
  b.unpack(theta0);
  return StepResult::Stalled;
}

double active_grad_norm(const Vec& theta, const Vec& g, const std::vector<bool>& movable,
                        double bound) {
  double mx = 0.0;
  for (int h : active_set(theta, g, movable, bound)) mx = std::max(mx, std::abs(g[h]));
  return mx;
}

// Freezes categories without weight at a negligible probability.
std::vector<bool> prepare_movable(LogitBlock& b, const WeightedLogitProblem& prob, double bound,
                                  LogitFitReport& rep) {
  std::vector<bool> movable(b.free_count(), true);
  if (b.family == LogitFamily::Design) return movable;
  const Vec colw = prob.W.colwise().sum().transpose();
  Vec theta = b.pack();
  bool changed = false;
  for (int m = 0; m < b.ncat; ++m) {
    if (m == b.ref || colw[m] >= 1e-12) continue;
    rep.degenerate.push_back(m);
    const auto pos = category_params(b, m);
    for (std::size_t q = 0; q < pos.size(); ++q) {
      movable[pos[q]] = false;
      changed = true;
    }
    // The intercept is the last entry for scored blocks, the first otherwise.
    const int intercept_pos = b.family == LogitFamily::Baseline ? pos.front() : pos.back();
    for (int p : pos) theta[p] = 0.0;
    theta[intercept_pos] = -bound;
    if (b.family == LogitFamily::Scored && pos.size() == 2) theta[pos.front()] = b.score[m];
  }
  if (changed) b.unpack(theta);
  return movable;
}

bool scores_flat(const LogitBlock& b, const WeightedLogitProblem& prob) {
  if (b.p == 0) return true;
  double mx = 0.0;
  for (int r = 0; r < prob.X.rows(); ++r)
    if (prob.W.row(r).sum() > 0.0) mx = std::max(mx, std::abs(prob.X.row(r).dot(b.shared)));
  return mx < 1e-12;
}

}  // namespace

WeightedLogitProblem WeightedLogitProblem::intercept_only(const VecRef& counts) {
  WeightedLogitProblem p;
  p.X = Mat::Zero(1, 0);
  p.W = counts.transpose();
  return p;
}

double weighted_loglik(const LogitBlock& block, const WeightedLogitProblem& prob) {
  Vec eta(block.ncat), x;
  double ll = 0.0;
  for (int r = 0; r < prob.W.rows(); ++r) {
    if (prob.W.row(r).sum() <= 0.0) continue;
    block.eta(row_of(prob, r, x), eta);
    log_normalize(eta);
    for (int m = 0; m < block.ncat; ++m)
      if (prob.W(r, m) > 0.0) ll += prob.W(r, m) * eta[m];
  }
  return ll;
}

Vec weighted_gradient(const LogitBlock& block, const WeightedLogitProblem& prob) {
  return evaluate(block, prob, false).g;
}

Mat weighted_neg_hessian(const LogitBlock& block, const WeightedLogitProblem& prob) {
  return evaluate(block, prob, true).h;
}

LogitFitReport fit_weighted_logit(LogitBlock& block, const WeightedLogitProblem& prob,
                                  const LogitFitOptions& opts) {
  check_problem(block, prob);
  if (block.has_free_scores()) return fit_stereotype(block, prob, opts);
  LogitFitReport rep;
  const double wtot = total_weight(prob);
  if (wtot <= 0.0 || block.free_count() == 0) {
    rep.skipped = wtot <= 0.0;
    rep.converged = true;
    rep.loglik = weighted_loglik(block, prob);
    return rep;
  }
  block.clamp(opts.bound);
  const auto movable = prepare_movable(block, prob, opts.bound, rep);
  const double tol = std::max(opts.tol, 1e-12 * wtot);
  Eval cur;
  for (rep.iterations = 0; rep.iterations < opts.max_iter; ++rep.iterations) {
    cur = evaluate(block, prob, true);
    rep.grad_norm = active_grad_norm(block.pack(), cur.g, movable, opts.bound);
    if (rep.grad_norm <= tol) {
      rep.converged = true;
      break;
    }
    if (newton_step(block, prob, opts, movable, cur, true, rep) != StepResult::Moved) {
      cur = evaluate(block, prob, false);
      rep.grad_norm = active_grad_norm(block.pack(), cur.g, movable, opts.bound);
      rep.converged = rep.grad_norm <= std::max(tol, 1e-9 * wtot);
      break;
    }
  }
  rep.loglik = weighted_loglik(block, prob);
  rep.clamped = block.at_bound(opts.bound);
  return rep;
}

LogitFitReport fit_stereotype(LogitBlock& block, const WeightedLogitProblem& prob,
                              const LogitFitOptions& opts) {
  check_problem(block, prob);
  LogitFitReport rep;
  const double wtot = total_weight(prob);
  if (wtot <= 0.0 || block.free_count() == 0) {
    rep.skipped = wtot <= 0.0;
    rep.converged = true;
    rep.loglik = weighted_loglik(block, prob);
    return rep;
  }
  block.clamp(opts.bound);
  const auto base = prepare_movable(block, prob, opts.bound, rep);
  const auto score_pos = block.score_positions();
  const double tol = std::max(opts.tol, 1e-12 * wtot);

  auto masked = [&](bool scores, bool coefs, bool flat) {
    std::vector<bool> m = base;
    std::vector<bool> is_score(m.size(), false);
    for (int p : score_pos) is_score[p] = true;
    for (std::size_t h = 0; h < m.size(); ++h) {
      if (is_score[h] && (!scores || flat)) m[h] = false;
      if (!is_score[h] && !coefs) m[h] = false;
    }
    return m;
  };

  int stalled = 0;
  for (rep.iterations = 0; rep.iterations < opts.max_iter; ++rep.iterations) {
    const bool flat = scores_flat(block, prob);
    const auto all = masked(true, true, flat);
    Eval cur = evaluate(block, prob, true);
    rep.grad_norm = active_grad_norm(block.pack(), cur.g, all, opts.bound);
    if (rep.grad_norm <= tol) {
      rep.converged = true;
      break;
    }
    StepResult res = newton_step(block, prob, opts, all, cur, false, rep);
    if (res == StepResult::NotPositiveDefinite || res == StepResult::Stalled) {
      // Alternate: coefficients with scores held, then scores with
      // coefficients held. Each half is a concave problem.
      const double before = cur.ll;
      newton_step(block, prob, opts, masked(false, true, flat), cur, true, rep);
      if (!scores_flat(block, prob)) {
        const Eval mid = evaluate(block, prob, true);
        newton_step(block, prob, opts, masked(true, false, false), mid, true, rep);
      }
      const double after = weighted_loglik(block, prob);
      if (!(after > before)) {
        if (++stalled >= 2) break;
      } else {
        stalled = 0;
      }
    }
  }
  const bool flat = scores_flat(block, prob);
  rep.flat_scores = flat;
  const Eval fin = evaluate(block, prob, false);
  rep.grad_norm = active_grad_norm(block.pack(), fin.g, masked(true, true, flat), opts.bound);
  rep.converged = rep.converged || rep.grad_norm <= std::max(tol, 1e-9 * wtot);
  rep.loglik = weighted_loglik(block, prob);
  rep.clamped = block.at_bound(opts.bound);
  return rep;
}

LogitFitReport fit_frequencies(LogitBlock& block, const VecRef& counts, double floor, double bound) {
  if (block.family != LogitFamily::Design || counts.size() != block.ncat)
    raise(ErrorCode::InvalidArgument, "frequency fit needs a saturated design block");
  if (!counts.allFinite() || (counts.array() < 0.0).any())
    raise(ErrorCode::NonFiniteWeights, "counts must be finite and nonnegative");
  LogitFitReport rep;
  const auto prob = WeightedLogitProblem::intercept_only(counts);
  const double total = counts.sum();
  if (total <= 0.0) {
    rep.skipped = true;
    rep.converged = true;
    return rep;
  }
  Vec lf = (counts / total).cwiseMax(floor).array().log();
  // Lift cells so that no adjacent log ratio leaves [-bound, bound]; clamping
  // the logits alone would move mass between the positive cells.
  for (int y = 1; y < lf.size(); ++y) lf[y] = std::max(lf[y], lf[y - 1] - bound);
  for (int y = static_cast<int>(lf.size()) - 2; y >= 0; --y) lf[y] = std::max(lf[y], lf[y + 1] - bound);
  log_normalize(lf);
  LogitBlock cand = block;
  cand.coef = awr_logits(lf.array().exp().matrix()).cwiseMax(-bound).cwiseMin(bound);
  const double ll_old = weighted_loglik(block, prob);
  const double ll_new = weighted_loglik(cand, prob);
  if (ll_new >= ll_old) block = cand;
  rep.loglik = std::max(ll_new, ll_old);
  rep.converged = true;
  rep.iterations = 1;
  rep.clamped = block.at_bound(bound);
  return rep;
}

}  // namespace rshmm
