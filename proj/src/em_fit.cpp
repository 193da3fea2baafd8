// SPDX-License-Identifier: Apache-2.0
#include "rshmm/em_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <numeric>
#include <random>

#include "rshmm/error.hpp"
#include "text_io.hpp"

namespace rshmm {

using ojson = nlohmann::ordered_json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Builds the block problems; unit < 0 aggregates over configurations.
BlockProblems build_problems(const PanelDataset& d, const EstimationIndex* index,
                             const LatentPosteriors& post, const ParamSet& ps, int unit) {
  const auto& spec = ps.spec();
  const int k = spec.k, T = d.T, r = d.r(), S = spec.joint_states();
  const bool agg = unit < 0;
  const auto blocks = ps.blocks();
  BlockProblems probs(blocks.size());

  auto init_rows = [&](const RowGroups* g, const Mat& m) -> Mat {
    return agg ? g->rows : Mat(m.row(unit));
  };
  auto trans_rows = [&](const RowGroups* g, const Mat& m) -> Mat {
    if (agg) return g->rows;
    Mat out(T - 1, m.cols());
    for (int t = 1; t < T; ++t) out.row(t - 1) = m.row(unit * T + t);
    return out;
  };
  auto setup = [&](WeightedLogitProblem& p, const LogitBlock& b, const Mat& rows) {
    if (b.p == 0) {
      p.X = Mat(1, 0);
      p.W = Mat::Zero(1, b.ncat);
    } else {
      p.X = rows;
      p.W = Mat::Zero(rows.rows(), b.ncat);
    }
  };

  int q = 0;
  const int q_init_L = q++;
  setup(probs[q_init_L], *blocks[q_init_L], init_rows(agg ? &index->init_L : nullptr, d.x_L));
  int q_init_U = -1;
  if (spec.has_rs) {
    q_init_U = q++;
    setup(probs[q_init_U], *blocks[q_init_U], init_rows(agg ? &index->init_U : nullptr, d.x_U));
  }
  const int q_trans_L = q;
  if (T > 1 || agg) {
    const Mat zl = trans_rows(agg ? &index->trans_L : nullptr, d.z_L);
    for (int l = 0; l < k; ++l) setup(probs[q + l], *blocks[q + l], zl);
  } else {
    for (int l = 0; l < k; ++l) setup(probs[q + l], *blocks[q + l], Mat(0, d.z_L.cols()));
  }
  q += k;
  const int q_trans_U = q;
  const int nb = static_cast<int>(ps.latent.trans_U.size());
  if (nb > 0) {
    const Mat zu = trans_rows(agg ? &index->trans_U : nullptr, d.z_U);
    for (int b = 0; b < nb; ++b) {
      const auto& blk = *blocks[q + b];
      setup(probs[q + b], blk, blk.p > 0 ? Mat(zu.leftCols(blk.p)) : zu);
    }
  }
  q += nb;
  const int q_rs = q;
  if (spec.has_rs) {
    for (int c = 0; c < k * r; ++c) probs[q + c] = WeightedLogitProblem::intercept_only(Vec::Zero(blocks[q + c]->ncat));
    q += k * r;
  }
  const int q_awr = q;
  for (int c = 0; c < k * r; ++c) probs[q + c] = WeightedLogitProblem::intercept_only(Vec::Zero(blocks[q + c]->ncat));

  const bool trans_L_cov = blocks[q_trans_L]->p > 0;
  const bool trans_U_cov = nb > 0 && blocks[q_trans_U]->p > 0;
  const bool init_L_cov = blocks[q_init_L]->p > 0;
  const bool init_U_cov = q_init_U >= 0 && blocks[q_init_U]->p > 0;

  const int i0 = agg ? 0 : unit;
  const int i1 = agg ? d.n : unit + 1;
  for (int i = i0; i < i1; ++i) {
    const int row_iL = init_L_cov ? (agg ? index->init_L.group_of[i] : 0) : 0;
    const int row_iU = init_U_cov ? (agg ? index->init_U.group_of[i] : 0) : 0;
    for (int s = 0; s < S; ++s) {
      const double w = post.d1(i, 0, s);
      probs[q_init_L].W(row_iL, s % k) += w;
      if (q_init_U >= 0) probs[q_init_U].W(row_iU, s / k) += w;
    }
    for (int t = 0; t < T; ++t) {
      const auto y = d.y_row(i, t);
      for (int s = 0; s < S; ++s) {
        const double w = post.d1(i, t, s);
        const int l = s % k;
        const bool rs_regime = spec.has_rs && s / k == 0;
        const int base = (rs_regime ? q_rs : q_awr) + l * r;
        for (int j = 0; j < r; ++j) probs[base + j].W(0, y[j]) += w;
      }
      if (t == 0) continue;
      const int flat = i * (T - 1) + t - 1;
      const int row_tL = trans_L_cov ? (agg ? index->trans_L.group_of[flat] : t - 1) : 0;
      const int row_tU = trans_U_cov ? (agg ? index->trans_U.group_of[flat] : t - 1) : 0;
      for (int sb = 0; sb < S; ++sb) {
        const int lb = sb % k, ub = sb / k;
        for (int s = 0; s < S; ++s) {
          const double w = post.d2(i, t, sb, s);
          const int l = s % k, u = s / k;
          probs[q_trans_L + lb].W(row_tL, l) += w;
          if (nb > 0) {
            const int b = spec.rs_block_index(l, ub);
            if (b >= 0) probs[q_trans_U + b].W(row_tU, u) += w;
          }
        }
      }
    }
  }
  return probs;
}

double block_value(const LogitBlock& b, const WeightedLogitProblem& p) { return weighted_loglik(b, p); }

}  // namespace

BlockProblems aggregate_problems(const PanelDataset& data, const EstimationIndex& index,
                                 const LatentPosteriors& post, const ParamSet& params) {
  return build_problems(data, &index, post, params, -1);
}

BlockProblems unit_problems(const PanelDataset& data, const LatentPosteriors& post,
                            const ParamSet& params, int i) {
  return build_problems(data, nullptr, post, params, i);
}

QAddends q_addends(const ParamSet& params, const BlockProblems& problems) {
  QAddends q;
  const auto refs = params.layout();
  const auto blocks = params.blocks();
  for (std::size_t b = 0; b < refs.size(); ++b) {
    const double v = block_value(*blocks[b], problems[b]);
    switch (refs[b].kind) {
      case BlockKind::InitL: q.init_L += v; break;
      case BlockKind::InitU: q.init_U += v; break;
      case BlockKind::TransL: q.trans_L += v; break;
      case BlockKind::TransU: q.trans_U += v; break;
      case BlockKind::ObsRS: q.obs_RS += v; break;
      case BlockKind::ObsAWR: q.obs_AWR += v; break;
    }
  }
  return q;
}

Vec q_gradient(const ParamSet& params, const BlockProblems& problems) {
  Vec g(params.size());
  const auto refs = params.layout();
  const auto blocks = params.blocks();
  for (std::size_t b = 0; b < refs.size(); ++b)
    if (refs[b].size > 0) g.segment(refs[b].offset, refs[b].size) = weighted_gradient(*blocks[b], problems[b]);
  return g;
}

MStepReport m_step(ParamSet& params, const BlockProblems& problems, const LogitFitOptions& opts) {
  const auto refs = params.layout();
  auto blocks = params.blocks();
  std::vector<LogitFitReport> reports(blocks.size());
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
    try {
      if (refs[b].kind == BlockKind::ObsAWR)
        reports[b] = fit_frequencies(*blocks[b], problems[b].W.row(0).transpose(), 1e-10, opts.bound);
      else
        reports[b] = fit_weighted_logit(*blocks[b], problems[b], opts);
    } catch (const Error& e) {
#pragma omp critical
      failure = e.what();
    }
  }
  if (!failure.empty()) raise(ErrorCode::NumericalFailure, "M-step: " + failure);
  MStepReport rep;
  for (const auto& r : reports) {
    rep.clamped = rep.clamped || r.clamped;
    rep.singular_step = rep.singular_step || r.singular_step;
    rep.flat_scores = rep.flat_scores || r.flat_scores;
    rep.degenerate += static_cast<int>(r.degenerate.size());
  }
  return rep;
}

EmStepResult em_step(const PanelDataset& data, const ParamSet& params) {
  const auto index = index_for_estimation(data);
  const auto cache = ModelCache::build(params, data, index);
  const auto post = posteriors(data, index, cache);
  EmStepResult out{params, post.loglik};
  m_step(out.params, aggregate_problems(data, index, post, params));
  return out;
}

Vec observed_score(const PanelDataset& data, const EstimationIndex& index, const ParamSet& params,
                   double* loglik) {
  const auto cache = ModelCache::build(params, data, index);
  const auto post = posteriors(data, index, cache);
  if (loglik) *loglik = post.loglik;
  return q_gradient(params, aggregate_problems(data, index, post, params));
}

Mat unit_scores(const PanelDataset& data, const ParamSet& params) {
  const auto post = posteriors(data, params);
  Mat out(data.n, params.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < data.n; ++i)
    out.row(i) = q_gradient(params, unit_problems(data, post, params, i)).transpose();
  return out;
}

ParamSet random_start(const PanelDataset& data, const ModelSpec& spec, double dispersion,
                      std::uint64_t seed) {
  ParamSet ps = ParamSet::make(spec, data.dims());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-dispersion, dispersion);
  const auto refs = ps.layout();
  auto blocks = ps.blocks();
  for (std::size_t b = 0; b < refs.size(); ++b) {
    LogitBlock& blk = *blocks[b];
    if (refs[b].kind == BlockKind::ObsAWR) {
      const int l = refs[b].index / data.r();
      const int j = refs[b].index % data.r();
      (void)l;
      Vec freq = Vec::Constant(blk.ncat, 0.5);
      for (int i = 0; i < data.n; ++i)
        for (int t = 0; t < data.T; ++t) freq[data.y_at(i, t, j)] += 1.0;
      freq /= freq.sum();
      Vec logits = awr_logits(freq);
      for (int h = 0; h < logits.size(); ++h) logits[h] += unif(rng);
      blk.coef = logits;
      continue;
    }
    Vec theta = blk.pack();
    const auto scores = blk.score_positions();
    for (int h = 0; h < theta.size(); ++h) {
      const bool is_score = std::find(scores.begin(), scores.end(), h) != scores.end();
      theta[h] = is_score ? theta[h] + 0.5 * unif(rng) : unif(rng);
    }
    blk.unpack(theta);
  }
  ps.clamp();
  return ps;
}

ParamSet quantile_start(const PanelDataset& data, const ModelSpec& spec) {
  ParamSet ps = ParamSet::make(spec, data.dims());
  const int k = spec.k, n = data.n, T = data.T, r = data.r();
  const int cells = n * T;
  std::vector<double> score(cells, 0.0);
  for (int q = 0; q < cells; ++q)
    for (int j = 0; j < r; ++j)
      score[q] += static_cast<double>(data.y_at(q / T, q % T, j)) / (data.categories[j] - 1);
  std::vector<int> order(cells);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] < score[b]; });
  std::vector<int> cls(cells);
  for (int rank = 0; rank < cells; ++rank)
    cls[order[rank]] = static_cast<int>(static_cast<long long>(rank) * k / cells);

  for (int l = 0; l < k; ++l)
    for (int j = 0; j < r; ++j) {
      Vec freq = Vec::Constant(data.categories[j], 0.5);
      for (int q = 0; q < cells; ++q)
        if (cls[q] == l) freq[data.y_at(q / T, q % T, j)] += 1.0;
      ps.obs.awr_block(l, j).coef = awr_logits(freq / freq.sum());
    }

  Vec first = Vec::Constant(k, 1.0);
  Mat moves = Mat::Constant(k, k, 1.0);
  for (int i = 0; i < n; ++i) {
    first[cls[i * T]] += 1.0;
    for (int t = 1; t < T; ++t) moves(cls[i * T + t - 1], cls[i * T + t]) += 1.0;
  }
  auto set_intercepts = [](LogitBlock& blk, const Vec& counts) {
    if (blk.family == LogitFamily::Design) return;
    for (int m = 0; m < blk.ncat; ++m)
      if (m != blk.ref) blk.intercept[m] = std::log(counts[m] / counts[blk.ref]);
  };
  set_intercepts(ps.latent.init_L, first);
  for (int lb = 0; lb < k; ++lb) set_intercepts(ps.latent.trans_L[lb], moves.row(lb).transpose());
  if (spec.has_rs)
    for (int l = 0; l < k; ++l)
      for (int ub = 0; ub < 2; ++ub) {
        const int b = spec.rs_block_index(l, ub);
        if (b >= 0 && b != spec.rs_block_index(l, 1 - ub))
          ps.latent.trans_U[b].intercept[1] = ub ? 1.5 : -1.5;
      }
  ps.clamp();
  return ps;
}

namespace {

double max_abs_at(const Vec& g, const std::vector<int>& idx) {
  double mx = 0.0;
  for (int h : idx) mx = std::max(mx, std::abs(g[h]));
  return mx;
}

// One monotone EM update in place; returns the log-likelihood after it.
double em_update(const PanelDataset& data, const EstimationIndex& index, ParamSet& params,
                 const FitConfig& config, double* before) {
  const auto cache = ModelCache::build(params, data, index);
  const auto post = posteriors(data, index, cache);
  if (before) *before = post.loglik;
  m_step(params, aggregate_problems(data, index, post, params), config.logit);
  return log_likelihood(data, index, ModelCache::build(params, data, index));
}

// Newton iterations on the observed log-likelihood with the score Jacobian
// from central differences; every accepted step increases the likelihood.
void polish(const PanelDataset& data, const EstimationIndex& index, FitResult& res,
            const FitConfig& config) {
  ParamSet& params = res.params;
  double ll = 0.0;
  Vec g = observed_score(data, index, params, &ll);
  auto idx = unclamped_indices(params);
  res.score_norm = max_abs_at(g, idx);
  for (int it = 0; it < config.max_polish && res.score_norm > config.tol_score; ++it) {
    const int m = static_cast<int>(idx.size());
    if (m == 0) break;
    const Vec theta = params.pack();
    Mat jac;
    try {
      jac = score_jacobian(data, index, params, idx);
    } catch (const Error&) {
      break;
    }
    Mat info = -0.5 * (jac + jac.transpose());
    Vec gf(m);
    for (int c = 0; c < m; ++c) gf[c] = g[idx[c]];
    const double scale = std::max(1e-12, info.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Mat> ldlt(info);
    double lambda = 0.0;
    while (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-10 * scale) {
      lambda = lambda == 0.0 ? 1e-8 * scale : lambda * 10.0;
      if (lambda > 1e6 * scale) break;
      Mat damped = info;
      damped.diagonal().array() += lambda;
      ldlt.compute(damped);
    }
    const Vec d = ldlt.solve(gf);
    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving <= 30 && d.allFinite(); ++halving, step *= 0.5) {
      Vec trial = theta;
      for (int c = 0; c < m; ++c)
        trial[idx[c]] = std::clamp(theta[idx[c]] + step * d[c], -config.logit.bound, config.logit.bound);
      ParamSet cand = params;
      cand.unpack(trial);
      double ll_new;
      try {
        ll_new = log_likelihood(data, index, ModelCache::build(cand, data, index));
      } catch (const Error&) {
        continue;
      }
      if (ll_new > ll) {
        params = std::move(cand);
        ll = ll_new;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      double before;
      const ParamSet saved = params;
      const double after = em_update(data, index, params, config, &before);
      if (!(after > ll)) {
        params = saved;
        break;
      }
      ll = after;
    }
    res.trace.push_back(ll);
    ++res.polish_steps;
    g = observed_score(data, index, params, &ll);
    idx = unclamped_indices(params);
    res.score_norm = max_abs_at(g, idx);
  }
  res.loglik = ll;
}

}  // namespace

std::vector<int> unclamped_indices(const ParamSet& params) {
  const auto mask = params.clamped_mask();
  std::vector<int> out;
  for (int h = 0; h < static_cast<int>(mask.size()); ++h)
    if (!mask[h]) out.push_back(h);
  return out;
}

Mat score_jacobian(const PanelDataset& data, const EstimationIndex& index, const ParamSet& params,
                   const std::vector<int>& coords) {
  const int m = static_cast<int>(coords.size());
  const Vec theta = params.pack();
  Mat jac(m, m);
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < m; ++c) {
    const int h = coords[c];
    const double step = std::max(1e-5, 1e-5 * std::abs(theta[h]));
    ParamSet plus = params, minus = params;
    Vec tp = theta, tm = theta;
    tp[h] += step;
    tm[h] -= step;
    plus.unpack(tp);
    minus.unpack(tm);
    try {
      const Vec gp = observed_score(data, index, plus);
      const Vec gm = observed_score(data, index, minus);
      for (int rr = 0; rr < m; ++rr) jac(rr, c) = (gp[coords[rr]] - gm[coords[rr]]) / (2.0 * step);
    } catch (const Error& e) {
#pragma omp critical
      failure = e.what();
    }
  }
  if (!failure.empty()) raise(ErrorCode::NumericalFailure, "score jacobian: " + failure);
  return jac;
}

FitResult fit_from(const PanelDataset& data, ParamSet start, const FitConfig& config) {
  if (!(start.dims() == data.dims()))
    raise(ErrorCode::DimensionMismatch, "starting value does not match the data dimensions");
  const auto index = index_for_estimation(data);
  FitResult res;
  res.spec = start.spec();
  res.n_units = data.n;
  res.n_par = count_params(start.spec(), start.dims());
  res.params = std::move(start);
  res.params.clamp(config.logit.bound);

  double ll_prev = 0.0;
  Vec theta_prev = res.params.pack();
  bool em_converged = false;
  for (int iter = 0;; ++iter) {
    const auto cache = ModelCache::build(res.params, data, index);
    const auto post = posteriors(data, index, cache);
    const double ll = post.loglik;
    res.trace.push_back(ll);
    if (iter > 0) {
      if (ll < ll_prev - config.decrease_slack)
        raise(ErrorCode::NumericalFailure,
              "log-likelihood decreased by " + detail::format_double(ll_prev - ll) + " at iteration " +
                  std::to_string(iter));
      const double rel = std::abs(ll - ll_prev) / std::max(1.0, std::abs(ll_prev));
      const double dpar = (res.params.pack() - theta_prev).cwiseAbs().maxCoeff();
      if (rel < config.tol_loglik && dpar < config.tol_param) {
        em_converged = true;
        break;
      }
    }
    if (iter >= config.max_iter) break;
    res.iterations = iter + 1;
    theta_prev = res.params.pack();
    ll_prev = ll;
    m_step(res.params, aggregate_problems(data, index, post, res.params), config.logit);
  }
  res.loglik = res.trace.back();
  res.converged = em_converged;
  if (config.polish) {
    polish(data, index, res, config);
    res.converged = res.score_norm <= config.tol_score;
  } else {
    res.score_norm = max_abs_at(observed_score(data, index, res.params), unclamped_indices(res.params));
  }
  if (config.canonicalize) res.canonical = canonicalize(res.params);
  const auto mask = res.params.clamped_mask();
  res.clamped = std::find(mask.begin(), mask.end(), true) != mask.end();
  return res;
}

FitResult fit(const PanelDataset& data, const ModelSpec& spec, const FitConfig& config) {
  data.validate(1);
  spec.validate();
  if (config.n_starts < 1 && config.warm_starts.empty())
    raise(ErrorCode::InvalidArgument, "n_starts must be >= 1");
  if (!(config.tol_loglik > 0.0) || !(config.tol_param > 0.0))
    raise(ErrorCode::InvalidArgument, "tolerances must be positive");

  std::vector<ParamSet> starts;
  for (const auto& w : config.warm_starts) {
    if (!(w.spec().k == spec.k && w.spec().has_rs == spec.has_rs))
      raise(ErrorCode::InvalidArgument, "warm start does not match the model");
    ParamSet s = ParamSet::make(spec, data.dims());
    if (w.spec() == spec || embed(w, s)) starts.push_back(w.spec() == spec ? w : s);
  }
  for (int q = 0; q < config.n_starts; ++q)
    starts.push_back(q == 0 && config.data_start
                         ? quantile_start(data, spec)
                         : random_start(data, spec, config.start_dispersion, derive_seed(config.seed, q)));

  FitConfig inner = config;
  inner.polish = false;
  inner.canonicalize = false;
  const int n_warm = static_cast<int>(starts.size()) - config.n_starts;
  const int n_all = static_cast<int>(starts.size());
  const bool screen = config.screen_iter > 0 && config.screen_iter < config.max_iter &&
                      config.n_starts > std::max(config.keep_starts, 1);
  std::vector<FitResult> results(n_all);
  std::vector<StartSummary> summaries(n_all);
  auto run = [&](int s, const ParamSet& from, const FitConfig& cfg) {
    try {
      FitResult r = fit_from(data, from, cfg);
      if (!results[s].trace.empty()) {
        r.trace.insert(r.trace.begin(), results[s].trace.begin(), results[s].trace.end() - 1);
        r.iterations += results[s].iterations;
      }
      results[s] = std::move(r);
      summaries[s].loglik = results[s].loglik;
      summaries[s].iterations = results[s].iterations;
      summaries[s].converged = results[s].converged;
      summaries[s].error.clear();
    } catch (const Error& e) {
      summaries[s].error = e.what();
      summaries[s].loglik = -std::numeric_limits<double>::infinity();
    }
  };
  for (int s = 0; s < n_all; ++s) summaries[s].start = s;

  std::vector<int> full(n_all);
  std::iota(full.begin(), full.end(), 0);
  if (screen) {
    FitConfig short_cfg = inner;
    short_cfg.max_iter = config.screen_iter;
    std::vector<int> random(config.n_starts);
    std::iota(random.begin(), random.end(), n_warm);
#pragma omp parallel for schedule(dynamic)
    for (int q = 0; q < config.n_starts; ++q) run(random[q], starts[random[q]], short_cfg);
    std::stable_sort(random.begin(), random.end(),
                     [&](int a, int b) { return summaries[a].loglik > summaries[b].loglik; });
    full.assign(n_warm, 0);
    std::iota(full.begin(), full.end(), 0);
    for (int q = 0; q < config.n_starts; ++q) {
      const int s = random[q];
      if (!summaries[s].error.empty() || summaries[s].converged) continue;
      if (q < config.keep_starts) {
        full.push_back(s);
      } else {
        summaries[s].screened_out = true;
      }
    }
  }
  FitConfig rest = inner;
  if (screen) rest.max_iter = config.max_iter - config.screen_iter;
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < static_cast<int>(full.size()); ++c) {
    const int s = full[c];
    run(s, results[s].trace.empty() ? starts[s] : results[s].params, s < n_warm ? inner : rest);
  }
  int best = -1;
  for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
    if (!summaries[s].error.empty() || summaries[s].screened_out) continue;
    if (best < 0 || summaries[s].loglik > summaries[best].loglik) best = s;
  }
  if (best < 0) {
    std::string msg = "every start failed";
    if (!summaries.empty()) msg += "; first error: " + summaries[0].error;
    raise(ErrorCode::AllStartsFailed, msg);
  }
  FitResult res = std::move(results[best]);
  res.best_start = best;
  res.starts = summaries;
  const auto index = index_for_estimation(data);
  if (config.polish) {
    polish(data, index, res, config);
    res.converged = res.score_norm <= config.tol_score;
  }
  if (config.canonicalize) res.canonical = canonicalize(res.params);
  const auto mask = res.params.clamped_mask();
  res.clamped = std::find(mask.begin(), mask.end(), true) != mask.end();
  return res;
}

FitResult fit_null(const PanelDataset& data) {
  FitConfig cfg;
  cfg.n_starts = 1;
  cfg.warm_starts.push_back(ParamSet::make(null_spec(), data.dims()));
  return fit(data, null_spec(), cfg);
}

std::string fit_to_json(const FitResult& fit, const CovariateNames& names) {
  ojson j;
  j["spec"] = ojson::parse(spec_to_json(fit.spec));
  j["loglik"] = fit.loglik;
  j["n_par"] = fit.n_par;
  j["n_units"] = fit.n_units;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["polish_steps"] = fit.polish_steps;
  j["score_norm"] = fit.score_norm;
  j["canonical"] = fit.canonical;
  j["clamped"] = fit.clamped;
  j["best_start"] = fit.best_start;
  ojson starts = ojson::array();
  for (const auto& s : fit.starts) {
    ojson e;
    e["start"] = s.start;
    if (s.error.empty()) {
      e["loglik"] = s.loglik;
      e["iterations"] = s.iterations;
      e["converged"] = s.converged;
      e["screened_out"] = s.screened_out;
    } else {
      e["error"] = s.error;
    }
    starts.push_back(e);
  }
  j["starts"] = starts;
  j["params"] = ojson::parse(params_to_json(fit.params, names));
  j["trace"] = fit.trace;
  return j.dump(2) + "\n";
}

FitResult fit_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    raise(ErrorCode::Parse, std::string("fit: ") + e.what());
  }
  try {
    FitResult f;
    f.params = params_from_json(j.at("params").dump());
    f.spec = f.params.spec();
    f.loglik = j.at("loglik").get<double>();
    f.n_par = j.value("n_par", count_params(f.spec, f.params.dims()));
    f.n_units = j.value("n_units", 0);
    f.converged = j.value("converged", false);
    f.iterations = j.value("iterations", 0);
    f.polish_steps = j.value("polish_steps", 0);
    f.score_norm = j.value("score_norm", 0.0);
    f.canonical = j.value("canonical", true);
    f.clamped = j.value("clamped", false);
    f.best_start = j.value("best_start", 0);
    if (j.contains("trace")) f.trace = j.at("trace").get<std::vector<double>>();
    return f;
  } catch (const ojson::exception& e) {
    raise(ErrorCode::Parse, std::string("fit: ") + e.what());
  }
}

std::string trace_csv(const FitResult& fit) {
  std::string out = "iteration,loglik\n";
  for (std::size_t s = 0; s < fit.trace.size(); ++s)
    out += std::to_string(s) + "," + detail::format_double(fit.trace[s]) + "\n";
  return out;
}

}  // namespace rshmm
