// SPDX-License-Identifier: Apache-2.0
#include "rshmm/logit_block.hpp"

#include <algorithm>
#include <cmath>

#include "rshmm/error.hpp"

namespace rshmm {

double log_normalize(Eigen::Ref<Vec> logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  logits.array() -= lse;
  return lse;
}

LogitBlock LogitBlock::make_baseline(int ncat, int ref, int p) {
  LogitBlock b;
  b.family = LogitFamily::Baseline;
  b.ncat = ncat;
  b.ref = ref;
  b.p = p;
  b.intercept = Vec::Zero(ncat);
  b.slopes = Mat::Zero(ncat, p);
  return b;
}

LogitBlock LogitBlock::make_scored(int ncat, int ref, int p, Vec scores,
                                   std::vector<bool> fixed) {
  if (scores.size() != ncat || static_cast<int>(fixed.size()) != ncat)
    raise(ErrorCode::DimensionMismatch, "score vector length must equal category count");
  LogitBlock b;
  b.family = LogitFamily::Scored;
  b.ncat = ncat;
  b.ref = ref;
  b.p = p;
  b.intercept = Vec::Zero(ncat);
  b.shared = Vec::Zero(p);
  b.score = std::move(scores);
  b.score_fixed = std::move(fixed);
  b.score[ref] = 0.0;
  b.score_fixed[ref] = true;
  return b;
}

LogitBlock LogitBlock::make_design(Mat design) {
  LogitBlock b;
  b.family = LogitFamily::Design;
  b.ncat = static_cast<int>(design.rows());
  b.ref = 0;
  b.p = 0;
  b.coef = Vec::Zero(design.cols());
  b.design = std::move(design);
  return b;
}

int LogitBlock::free_count() const {
  switch (family) {
    case LogitFamily::Baseline: return (ncat - 1) * (1 + p);
    case LogitFamily::Scored: {
      int nfree = 0;
      for (int m = 0; m < ncat; ++m) nfree += score_fixed[m] ? 0 : 1;
      return nfree + (ncat - 1) + p;
    }
    case LogitFamily::Design: return static_cast<int>(coef.size());
  }
  return 0;
}

bool LogitBlock::has_free_scores() const {
  if (family != LogitFamily::Scored) return false;
  return std::any_of(score_fixed.begin(), score_fixed.end(), [](bool f) { return !f; });
}

void LogitBlock::eta(const VecRef& x, Eigen::Ref<Vec> out) const {
  switch (family) {
    case LogitFamily::Baseline:
      out = intercept;
      if (p > 0) out.noalias() += slopes * x;
      break;
    case LogitFamily::Scored: {
      const double lin = p > 0 ? shared.dot(x) : 0.0;
      out = intercept + score * lin;
      break;
    }
    case LogitFamily::Design:
      out.noalias() = design * coef;
      break;
  }
  out[ref] = 0.0;
}

Vec LogitBlock::log_probs(const VecRef& x) const {
  Vec e(ncat);
  eta(x, e);
  log_normalize(e);
  return e;
}

Vec LogitBlock::probs(const VecRef& x) const { return log_probs(x).array().exp(); }

void LogitBlock::eta_jacobian(const VecRef& x, Eigen::Ref<Mat> jac) const {
  jac.setZero();
  switch (family) {
    case LogitFamily::Baseline: {
      int pos = 0;
      for (int m = 0; m < ncat; ++m) {
        if (m == ref) continue;
        jac(m, pos++) = 1.0;
      }
      for (int m = 0; m < ncat; ++m) {
        if (m == ref) continue;
        for (int h = 0; h < p; ++h) jac(m, pos + h) = x[h];
        pos += p;
      }
      break;
    }
    case LogitFamily::Scored: {
      const double lin = p > 0 ? shared.dot(x) : 0.0;
      int pos = 0;
      for (int m = 0; m < ncat; ++m) {
        if (score_fixed[m]) continue;
        jac(m, pos++) = lin;
      }
      for (int m = 0; m < ncat; ++m) {
        if (m == ref) continue;
        jac(m, pos++) = 1.0;
      }
      for (int m = 0; m < ncat; ++m) {
        if (m == ref) continue;
        for (int h = 0; h < p; ++h) jac(m, pos + h) = score[m] * x[h];
      }
      break;
    }
    case LogitFamily::Design:
      jac = design;
      break;
  }
}

void LogitBlock::add_eta_curvature(const VecRef& x, const VecRef& resid,
                                   Eigen::Ref<Mat> h) const {
  if (family != LogitFamily::Scored || p == 0) return;
  int nfree = 0;
  for (int m = 0; m < ncat; ++m) nfree += score_fixed[m] ? 0 : 1;
  const int shared_pos = nfree + (ncat - 1);
  int pos = 0;
  for (int m = 0; m < ncat; ++m) {
    if (score_fixed[m]) continue;
    for (int j = 0; j < p; ++j) {
      const double v = resid[m] * x[j];
      h(pos, shared_pos + j) += v;
      h(shared_pos + j, pos) += v;
    }
    ++pos;
  }
}

Vec LogitBlock::pack() const {
  Vec theta(free_count());
  int pos = 0;
  switch (family) {
    case LogitFamily::Baseline:
      for (int m = 0; m < ncat; ++m)
        if (m != ref) theta[pos++] = intercept[m];
      for (int m = 0; m < ncat; ++m) {
        if (m == ref) continue;
        for (int h = 0; h < p; ++h) theta[pos++] = slopes(m, h);
      }
      break;
    case LogitFamily::Scored:
      for (int m = 0; m < ncat; ++m)
        if (!score_fixed[m]) theta[pos++] = score[m];
      for (int m = 0; m < ncat; ++m)
        if (m != ref) theta[pos++] = intercept[m];
      for (int h = 0; h < p; ++h) theta[pos++] = shared[h];
      break;
    case LogitFamily::Design:
      theta = coef;
      break;
  }
  return theta;
}

void LogitBlock::unpack(const VecRef& theta) {
  if (theta.size() != free_count())
    raise(ErrorCode::DimensionMismatch, "packed parameter length mismatch");
  int pos = 0;
  switch (family) {
    case LogitFamily::Baseline:
      for (int m = 0; m < ncat; ++m)
        if (m != ref) intercept[m] = theta[pos++];
      for (int m = 0; m < ncat; ++m) {
        if (m == ref) continue;
        for (int h = 0; h < p; ++h) slopes(m, h) = theta[pos++];
      }
      break;
    case LogitFamily::Scored:
      for (int m = 0; m < ncat; ++m)
        if (!score_fixed[m]) score[m] = theta[pos++];
      for (int m = 0; m < ncat; ++m)
        if (m != ref) intercept[m] = theta[pos++];
      for (int h = 0; h < p; ++h) shared[h] = theta[pos++];
      break;
    case LogitFamily::Design:
      coef = theta;
      break;
  }
}

std::vector<int> LogitBlock::score_positions() const {
  std::vector<int> out;
  if (family != LogitFamily::Scored) return out;
  int pos = 0;
  for (int m = 0; m < ncat; ++m)
    if (!score_fixed[m]) out.push_back(pos++);
  return out;
}

std::vector<int> LogitBlock::coefficient_positions() const {
  const auto scores = score_positions();
  std::vector<int> out;
  for (int i = static_cast<int>(scores.size()); i < free_count(); ++i) out.push_back(i);
  return out;
}

std::vector<std::string> LogitBlock::free_names(
    const std::vector<std::string>& covariates,
    const std::vector<std::string>& design_names) const {
  auto cov = [&](int h) {
    return h < static_cast<int>(covariates.size()) ? covariates[h]
                                                   : "x" + std::to_string(h + 1);
  };
  std::vector<std::string> names;
  switch (family) {
    case LogitFamily::Baseline:
      for (int m = 0; m < ncat; ++m)
        if (m != ref) names.push_back("intercept[" + std::to_string(m + 1) + "]");
      for (int m = 0; m < ncat; ++m) {
        if (m == ref) continue;
        for (int h = 0; h < p; ++h)
          names.push_back("slope[" + std::to_string(m + 1) + "][" + cov(h) + "]");
      }
      break;
    case LogitFamily::Scored:
      for (int m = 0; m < ncat; ++m)
        if (!score_fixed[m]) names.push_back("score[" + std::to_string(m + 1) + "]");
      for (int m = 0; m < ncat; ++m)
        if (m != ref) names.push_back("intercept[" + std::to_string(m + 1) + "]");
      for (int h = 0; h < p; ++h) names.push_back("slope[" + cov(h) + "]");
      break;
    case LogitFamily::Design:
      for (int q = 0; q < coef.size(); ++q)
        names.push_back(q < static_cast<int>(design_names.size())
                            ? design_names[q]
                            : "coef[" + std::to_string(q + 1) + "]");
      break;
  }
  return names;
}

void LogitBlock::clamp(double bound) {
  auto c = [bound](auto& v) { v = v.cwiseMax(-bound).cwiseMin(bound); };
  switch (family) {
    case LogitFamily::Baseline:
      c(intercept);
      c(slopes);
      break;
    case LogitFamily::Scored:
      c(intercept);
      c(shared);
      c(score);
      break;
    case LogitFamily::Design:
      c(coef);
      break;
  }
}

bool LogitBlock::at_bound(double bound) const {
  const Vec t = pack();
  return t.size() > 0 && t.cwiseAbs().maxCoeff() >= bound - 1e-9;
}

bool relabel_into(const LogitBlock& src, const std::vector<int>& perm,
                  LogitBlock& target) {
  const int ncat = src.ncat;
  if (target.ncat != ncat || static_cast<int>(perm.size()) != ncat) return false;
  if (src.family == LogitFamily::Design || target.family == LogitFamily::Design) {
    if (src.family != target.family || src.design != target.design) return false;
    target.coef = src.coef;
    return true;
  }
  if (src.p != target.p) return false;
  const int p = src.p;

  // Per-category intercepts and slope vectors of src, then re-reference.
  Vec a(ncat);
  Mat b(ncat, p);
  for (int m = 0; m < ncat; ++m) {
    a[m] = src.intercept[m];
    if (src.family == LogitFamily::Baseline)
      b.row(m) = src.slopes.row(m);
    else
      b.row(m) = src.score[m] * src.shared.transpose();
  }
  const int r = perm[target.ref];
  Vec na(ncat);
  Mat nb(ncat, p);
  for (int m = 0; m < ncat; ++m) {
    na[m] = a[perm[m]] - a[r];
    nb.row(m) = b.row(perm[m]) - b.row(r);
  }

  target.intercept = na;
  if (target.family == LogitFamily::Baseline) {
    target.slopes = nb;
    return true;
  }

  // Scored target: every slope row must be proportional to one shared vector.
  int anchor = -1;
  for (int m = 0; m < ncat; ++m)
    if (m != target.ref && target.score_fixed[m] && target.score[m] != 0.0) {
      anchor = m;
      break;
    }
  if (anchor < 0) return false;
  const double scale = std::max(1.0, nb.cwiseAbs().maxCoeff());
  Vec shared = nb.row(anchor).transpose() / target.score[anchor];
  const double ss = shared.squaredNorm();
  Vec scores = target.score;
  for (int m = 0; m < ncat; ++m) {
    if (m == target.ref) {
      scores[m] = 0.0;
      continue;
    }
    if (!target.score_fixed[m]) {
      if (ss > 0) scores[m] = nb.row(m).dot(shared) / ss;
    }
    if (p > 0 && (nb.row(m).transpose() - scores[m] * shared).cwiseAbs().maxCoeff() >
                     1e-9 * scale)
      return false;
  }
  target.shared = shared;
  target.score = scores;
  return true;
}

}  // namespace rshmm
