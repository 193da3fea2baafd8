// SPDX-License-Identifier: Apache-2.0
// Acceptance harness: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria (e.g. `acceptance 1 2 3`); default runs all of them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "rshmm/diagnostics.hpp"
#include "rshmm/selection.hpp"
#include "rshmm/simulator.hpp"
#include "rshmm/uncertainty.hpp"

using namespace rshmm;

namespace {

constexpr std::uint64_t kRecoverySeed = 1;
constexpr int kRecoveryStarts = 10;
constexpr int kBootReps = 200;
constexpr int kSelectionStarts = 50;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared state of the recovery scenario (criteria 5 to 8 and 10).
struct Recovery {
  ParamSet truth;
  SimResult sim;
  FitResult fit;
  double fit_seconds = 0.0;
  std::optional<std::vector<SeResult>> se;  // OIM, OPIM, SDW, BOOT
  double se_seconds = 0.0;
};

Recovery& recovery() {
  static std::optional<Recovery> r;
  if (!r) {
    r.emplace();
    r->truth = shiw_truth();
    SimConfig sc;
    sc.params = r->truth;
    sc.n = 1000;
    sc.T = 6;
    sc.seed = kRecoverySeed;
    r->sim = simulate(sc);
    FitConfig fc;
    fc.n_starts = kRecoveryStarts;
    fc.seed = kRecoverySeed;
    const auto t0 = std::chrono::steady_clock::now();
    r->fit = fit(r->sim.data, r->truth.spec(), fc);
    r->fit_seconds = seconds_since(t0);
  }
  return *r;
}

const std::vector<SeResult>& recovery_se() {
  auto& r = recovery();
  if (!r.se) {
    BootConfig bc;
    bc.replicates = kBootReps;
    bc.seed = kRecoverySeed;
    const auto t0 = std::chrono::steady_clock::now();
    r.se = standard_errors(r.sim.data, r.fit.params,
                           {SeMethod::OIM, SeMethod::OPIM, SeMethod::SDW, SeMethod::BOOT}, bc);
    r.se_seconds = seconds_since(t0);
  }
  return *r.se;
}

void criterion1() {
  const std::vector<std::tuple<std::string, int, int>> table = {
      {"M1", 2, 70}, {"M1", 3, 129}, {"M2", 3, 153}, {"M3", 3, 129}, {"M4", 3, 126}, {"M6", 2, 58},
      {"M6", 3, 111}, {"M7", 3, 87}, {"M8", 2, 58}, {"M8", 3, 84}, {"M8", 4, 112}};
  int ok = 0;
  std::string bad;
  for (const auto& [v, k, expect] : table) {
    const auto s = variant_spec(v, k);
    const ModelDims dims{{6, 3}, 7, 7, 7, s.rs_uses_covariates() ? 7 : 0};
    const int got = count_params(s, dims);
    if (got == expect) ++ok;
    else bad += fmt(" %s/k=%d:%d!=%d", v.c_str(), k, got, expect);
  }
  report(1, ok == static_cast<int>(table.size()), fmt("%d/%zu parameter counts match%s", ok, table.size(), bad.c_str()));
}

void criterion2() {
  const double a = bic(-14534.76, 84, 1109), b = bic(-14773.11, 86, 1109);
  report(2, std::abs(a - 29658.46) <= 0.05 && std::abs(b - 30149.18) <= 0.05,
         fmt("BIC = %.2f (29658.46), %.2f (30149.18)", a, b));
}

void criterion3() {
  const int instances = 120;
  double worst_ll = 0.0, worst_post = 0.0;
  for (int q = 0; q < instances; ++q) {
    auto inst = oracle::random_instance(1000 + q, 2, {3}, 3, 3, 4.0);
    Vec th = inst.params.pack();
    for (auto& v : th) v = std::clamp(v, -kLogitBound, kLogitBound);
    inst.params.unpack(th);
    const long double ref = oracle::log_likelihood(inst.data, inst.params);
    const double ll = log_likelihood(inst.data, inst.params);
    worst_ll = std::max(worst_ll, static_cast<double>(std::abs(ll - ref) / std::abs(ref)));
    const auto post = posteriors(inst.data, inst.params);
    for (int i = 0; i < inst.data.n; ++i) {
      const auto up = oracle::unit_posteriors(inst.data, inst.params, i);
      for (int t = 0; t < 3; ++t)
        for (int s = 0; s < post.S; ++s) {
          worst_post = std::max(worst_post, std::abs(post.d1(i, t, s) - static_cast<double>(up.d1[t][s])));
          if (t == 0) continue;
          for (int sb = 0; sb < post.S; ++sb)
            worst_post = std::max(worst_post, std::abs(post.d2(i, t, sb, s) - static_cast<double>(up.d2[t][sb * post.S + s])));
        }
    }
  }
  report(3, worst_ll <= 1e-10 && worst_post <= 1e-10,
         fmt("%d instances, max rel loglik error %.1e, max posterior error %.1e", instances, worst_ll, worst_post));
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelDims dims{{6, 3}, 2, 2, 2, 0};
  int monotone = 0, converged = 0;
  double worst_drop = 0.0, worst_score = 0.0;
  for (int q = 0; q < 20; ++q) {
    const int k = 2 + q % 2;
    const auto spec = variant_spec("M8", k);
    auto truth = ParamSet::make(spec, dims);
    std::mt19937_64 rng(derive_seed(4, q));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec th(truth.size());
    for (auto& v : th) v = u(rng);
    truth.unpack(th);
    SimConfig sc;
    sc.params = truth;
    sc.n = 300;
    sc.T = 4;
    sc.seed = derive_seed(40, q);
    sc.prevalences = {0.3, 0.6};
    sc.covariate_names = {"a", "b"};
    const auto data = simulate(sc).data;
    FitConfig fc;
    fc.n_starts = 5;
    fc.seed = q + 1;
    const auto res = fit(data, spec, fc);
    double drop = 0.0;
    for (std::size_t s = 1; s < res.trace.size(); ++s) drop = std::max(drop, res.trace[s - 1] - res.trace[s]);
    bool starts_ok = true;
    for (const auto& st : res.starts) starts_ok = starts_ok && st.error.empty();
    worst_drop = std::max(worst_drop, drop);
    if (drop <= 1e-8 && starts_ok) ++monotone;
    if (res.converged && res.score_norm <= 1e-5) ++converged;
    worst_score = std::max(worst_score, res.score_norm);
  }
  const double secs = seconds_since(t0);
  report(4, monotone == 20 && converged == 20 && secs < 300,
         fmt("monotone %d/20 (max drop %.1e), converged %d/20 (max score %.1e), %.0f s", monotone, worst_drop,
             converged, worst_score, secs));
}

void criterion5() {
  auto& r = recovery();
  const auto& se = recovery_se();
  const Vec truth = r.truth.pack(), est = r.fit.params.pack();
  const Vec& boot = se[3].se;
  int within = 0;
  for (int h = 0; h < truth.size(); ++h)
    if (std::isfinite(boot[h]) && std::abs(est[h] - truth[h]) <= 3.0 * boot[h]) ++within;
  const double share = within / static_cast<double>(truth.size());
  int modes = 0;
  const auto& cats = r.truth.obs.categories;
  for (int l = 0; l < 3; ++l)
    for (int j = 0; j < 2; ++j) {
      const auto& a = r.truth.obs.rs_block(l, j).coef;
      const auto& b = r.fit.params.obs.rs_block(l, j).coef;
      if (rs_mode_class(cats[j], a[0], a[1]).label == rs_mode_class(cats[j], b[0], b[1]).label) ++modes;
    }
  const double secs = r.fit_seconds + r.se_seconds;
  report(5, share >= 0.9 && modes == 6 && secs < 1800,
         fmt("%d/%d parameters within 3 bootstrap SEs (%.1f%%), mode classes %d/6, converged %d, fit+SE %.0f s",
             within, static_cast<int>(truth.size()), 100 * share, modes, r.fit.converged, secs));
}

void criterion6() {
  auto& r = recovery();
  const auto& se = recovery_se();
  const auto unclamped = unclamped_indices(r.fit.params);
  std::vector<double> oim_opim, sdw_opim, sdw_oim;
  for (int h : unclamped) {
    const double a = se[0].se[h], b = se[1].se[h], c = se[2].se[h];
    if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c))) continue;
    oim_opim.push_back(a / b);
    sdw_opim.push_back(c / b);
    sdw_oim.push_back(c / a);
  }
  const double m1 = median(oim_opim), m2 = median(sdw_opim), m3 = median(sdw_oim);
  auto in_band = [](double m) { return m >= 0.8 && m <= 1.25; };

  const auto names = r.fit.params.names();
  std::vector<double> boot_opim;
  for (int h : unclamped) {
    if (names[h].rfind("pi_L1", 0) != 0 && names[h].rfind("pi_U1", 0) != 0) continue;
    if (std::isfinite(se[3].se[h]) && std::isfinite(se[1].se[h])) boot_opim.push_back(se[3].se[h] / se[1].se[h]);
  }
  const double mb = median(boot_opim);
  report(6, in_band(m1) && in_band(m2) && in_band(m3) && std::abs(mb - 1.0) <= 0.35 && r.se_seconds < 7200,
         fmt("median ratios OIM/OPIM %.3f, SDW/OPIM %.3f, SDW/OIM %.3f over %zu parameters; BOOT/OPIM on the "
             "initial blocks %.3f (%zu parameters, %d replicates kept, %d dropped), %.0f s",
             m1, m2, m3, oim_opim.size(), mb, boot_opim.size(), se[3].replicates, se[3].dropped, r.se_seconds));
}

void criterion7() {
  const bool r2_zero = r_squared(-1234.5, -1234.5, 100, 2) == 0.0;
  const int k = 3, S = 6, n = 4, T = 3;
  auto build = [&](auto f) {
    LatentPosteriors p;
    p.n = n;
    p.T = T;
    p.S = S;
    p.delta1.resize(n * T * S);
    for (int q = 0; q < n * T; ++q)
      for (int s = 0; s < S; ++s) p.delta1[q * S + s] = f(q, s);
    return p;
  };
  const auto uni = s_indices(build([](int, int) { return 1.0 / 6; }), k, true);
  const auto deg = s_indices(build([](int q, int s) { return s == q % 6 ? 1.0 : 0.0; }), k, true);
  const bool endpoints = std::abs(uni.S) < 1e-12 && std::abs(deg.S - 1.0) < 1e-12;

  auto& r = recovery();
  const auto rep = fit_indices(r.sim.data, r.fit, fit_null(r.sim.data).loglik);
  std::vector<double> vals = {rep.s.S, rep.s.S_L, rep.s.S_U, rep.s.S_L_RS, rep.s.S_L_AWR};
  vals.insert(vals.end(), rep.s.S_U_given_L.begin(), rep.s.S_U_given_L.end());
  bool bounded = true;
  for (double v : vals) bounded = bounded && std::isfinite(v) && v >= 0.0 && v <= 1.0;
  report(7, r2_zero && endpoints && bounded,
         fmt("R2 at null %s; S uniform %.2g, degenerate %.2g; fitted S=%.3f S_L=%.3f S_U=%.3f S_L|RS=%.3f "
             "S_L|AWR=%.3f S_U|L=(%.3f,%.3f,%.3f)",
             r2_zero ? "0" : "nonzero", uni.S, deg.S, vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6],
             vals[7]));
}

void criterion8() {
  auto& r = recovery();
  const auto data = parametric_bootstrap_panel(r.sim.data, r.fit.params, derive_seed(kRecoverySeed, 8));
  FitConfig fc;
  fc.n_starts = kRecoveryStarts;
  fc.seed = kRecoverySeed + 8;
  fc.warm_starts = {r.fit.params};
  const auto refit = fit(data, r.fit.spec, fc);
  const auto table = residuals(data, refit.params);
  const double share = share_within(table);
  std::map<std::pair<int, int>, double> mu, rho2;
  for (const auto& c : table.cells) {
    mu[{c.t, c.config}] += c.expected;
    if (!std::isnan(c.residual)) rho2[{c.t, c.config}] += c.residual * c.residual;
  }
  double mu_err = 0.0, chi_err = 0.0;
  for (const auto& x : table.chi2) {
    mu_err = std::max(mu_err, std::abs(mu[{x.t, x.config}] - x.units));
    chi_err = std::max(chi_err, std::abs(rho2[{x.t, x.config}] - x.chi2));
  }
  report(8, share >= 0.92 && mu_err <= 1e-9 && chi_err <= 1e-10,
         fmt("%.2f%% of %zu residuals in [-2, 2]; max |sum mu - units| %.1e; max |sum rho^2 - chi2| %.1e", 100 * share,
             table.cells.size(), mu_err, chi_err));
}

void criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto truth = shiw_truth();
  int picked = 0;
  std::string ks;
  for (int q = 0; q < 20; ++q) {
    SimConfig sc;
    sc.params = truth;
    sc.n = 1000;
    sc.T = 6;
    sc.seed = 9000 + q;
    const auto data = simulate(sc).data;
    FitConfig fc;
    fc.n_starts = kSelectionStarts;
    fc.seed = 9000 + q;
    const auto sel = select_models(data, variant_grid({"M8"}, {2, 3, 4}), fc);
    const int k = sel.best >= 0 ? sel.rows[sel.best].spec.k : 0;
    picked += k == 3;
    ks += std::to_string(k);
  }
  report(9, picked >= 18, fmt("k = 3 selected in %d/20 runs (picks %s), %.0f s", picked, ks.c_str(), seconds_since(t0)));
}

void criterion10() {
  auto& r = recovery();
  FitConfig fc;
  fc.n_starts = kRecoveryStarts;
  fc.seed = kRecoverySeed + 10;
  const auto sel = select_models(r.sim.data, variant_grid({"M8", "M7", "M6"}, {3}), fc);
  const double l8 = sel.rows[0].loglik, l7 = sel.rows[1].loglik, l6 = sel.rows[2].loglik;
  const bool ok = sel.rows[0].ok && sel.rows[1].ok && sel.rows[2].ok && l8 <= l7 + 1e-6 && l7 <= l6 + 1e-6;
  report(10, ok, fmt("k = 3: parallel-baseline %.3f <= stereotype %.3f <= unrestricted %.3f", l8, l7, l6));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<void()>> all = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                  criterion6, criterion7, criterion8, criterion9, criterion10};
  std::set<int> chosen;
  for (int a = 1; a < argc; ++a) chosen.insert(std::atoi(argv[a]));
  for (int id = 1; id <= static_cast<int>(all.size()); ++id) {
    if (!chosen.empty() && !chosen.count(id)) continue;
    try {
      all[id - 1]();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
