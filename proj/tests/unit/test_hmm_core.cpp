// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "rshmm/hmm_core.hpp"

using namespace rshmm;

namespace {

double rel(long double a, long double b) { return static_cast<double>(std::abs(a - b) / std::max(1.0L, std::abs(b))); }

}  // namespace

TEST_CASE("log-likelihood matches the path-sum oracle [property]") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto inst = oracle::random_instance(seed, 2, {3}, 3, 3);
    const double ll = log_likelihood(inst.data, inst.params);
    CHECK(rel(ll, oracle::log_likelihood(inst.data, inst.params)) < 1e-10);
  }
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto inst = oracle::random_instance(seed, 2, {4, 3}, 3, 2, 3.0);
    CHECK(rel(log_likelihood(inst.data, inst.params), oracle::log_likelihood(inst.data, inst.params)) < 1e-10);
  }
}

TEST_CASE("unit log-likelihood from the normalizers") {
  const auto inst = oracle::random_instance(7, 2, {3}, 3, 4);
  for (int i = 0; i < inst.data.n; ++i) {
    const auto fb = forward_backward(inst.data, inst.params, i);
    CHECK(fb.loglik == doctest::Approx((fb.log_m + fb.shift).sum()).epsilon(1e-14));
    CHECK(rel(fb.loglik, std::log(oracle::unit_likelihood(inst.data, inst.params, i))) < 1e-10);
    for (int t = 0; t < inst.data.T; ++t) CHECK(fb.alpha.row(t).sum() == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("uniform model") {
  auto inst = oracle::random_instance(3, 2, {3}, 2, 5);
  inst.params.unpack(Vec::Zero(inst.params.size()));
  const double ll = log_likelihood(inst.data, inst.params);
  CHECK(ll == doctest::Approx(5 * 2 * std::log(1.0 / 3)).epsilon(1e-13));
}

TEST_CASE("posteriors match the oracle and satisfy the consistency identities [property]") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = oracle::random_instance(seed, 2, {3}, 3, 3);
    const auto post = posteriors(inst.data, inst.params);
    const int S = post.S, T = post.T;
    for (int i = 0; i < inst.data.n; ++i) {
      const auto ref = oracle::unit_posteriors(inst.data, inst.params, i);
      for (int t = 0; t < T; ++t) {
        double tot = 0.0;
        for (int s = 0; s < S; ++s) {
          CHECK(std::abs(post.d1(i, t, s) - static_cast<double>(ref.d1[t][s])) < 1e-10);
          tot += post.d1(i, t, s);
        }
        CHECK(std::abs(tot - 1.0) < 1e-10);
      }
      for (int t = 1; t < T; ++t) {
        double tot = 0.0;
        for (int sb = 0; sb < S; ++sb)
          for (int s = 0; s < S; ++s) {
            CHECK(std::abs(post.d2(i, t, sb, s) - static_cast<double>(ref.d2[t][sb * S + s])) < 1e-10);
            tot += post.d2(i, t, sb, s);
          }
        CHECK(std::abs(tot - 1.0) < 1e-10);
        for (int s = 0; s < S; ++s) {
          double into = 0.0, out = 0.0;
          for (int o = 0; o < S; ++o) {
            into += post.d2(i, t, o, s);
            out += post.d2(i, t, s, o);
          }
          CHECK(std::abs(into - post.d1(i, t, s)) < 1e-10);
          CHECK(std::abs(out - post.d1(i, t - 1, s)) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("single occasion") {
  const auto inst = oracle::random_instance(11, 2, {3}, 1, 3);
  const auto post = posteriors(inst.data, inst.params);
  for (int i = 0; i < 3; ++i) {
    const auto pr = oracle::unit_probabilities(inst.data, inst.params, i);
    long double z = 0;
    for (int s = 0; s < pr.S; ++s) z += pr.init[s] * pr.emit[0][s];
    const auto fb = forward_backward(inst.data, inst.params, i);
    CHECK(rel(fb.loglik, std::log(z)) < 1e-12);
    for (int s = 0; s < pr.S; ++s) CHECK(post.d1(i, 0, s) == doctest::Approx(static_cast<double>(pr.init[s] * pr.emit[0][s] / z)).epsilon(1e-12));
    const Vec f = full_conditional_pmf(inst.data, inst.params, i, 0);
    const Mat grid = emission_grid(inst.params);
    for (int y = 0; y < 3; ++y) {
      long double m = 0;
      for (int s = 0; s < pr.S; ++s) m += pr.init[s] * grid(s, y);
      CHECK(f[y] == doctest::Approx(static_cast<double>(m)).epsilon(1e-12));
    }
  }
}

TEST_CASE("state-independent emissions carry no information") {
  auto inst = oracle::random_instance(21, 2, {3}, 3, 4);
  for (auto& b : inst.params.obs.rs) b.coef << 0.3, -0.2;
  for (auto& b : inst.params.obs.awr) b.coef = awr_logits(rs_pmf(3, 0.3, -0.2));
  const auto post = posteriors(inst.data, inst.params);
  const Vec marginal = rs_pmf(3, 0.3, -0.2);
  for (int i = 0; i < 4; ++i) {
    const auto pr = oracle::unit_probabilities(inst.data, inst.params, i);
    std::vector<long double> prior(pr.init.begin(), pr.init.end());
    for (int t = 0; t < 3; ++t) {
      if (t > 0) {
        std::vector<long double> next(pr.S, 0.0L);
        for (int sb = 0; sb < pr.S; ++sb)
          for (int s = 0; s < pr.S; ++s) next[s] += prior[sb] * pr.kernel[t][sb * pr.S + s];
        prior = next;
      }
      for (int s = 0; s < pr.S; ++s) CHECK(post.d1(i, t, s) == doctest::Approx(static_cast<double>(prior[s])).epsilon(1e-12));
      const Vec f = full_conditional_pmf(inst.data, inst.params, i, t);
      for (int y = 0; y < 3; ++y) CHECK(f[y] == doctest::Approx(marginal[y]).epsilon(1e-12));
    }
  }
}

TEST_CASE("full-conditional pmfs match enumeration [property]") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = oracle::random_instance(seed, 2, {3, 2}, 3, 2);
    const Mat all = full_conditional_pmfs(inst.data, inst.params);
    for (int i = 0; i < inst.data.n; ++i)
      for (int t = 0; t < inst.data.T; ++t) {
        const auto ref = oracle::full_conditional(inst.data, inst.params, i, t);
        const Vec f = full_conditional_pmf(inst.data, inst.params, i, t);
        CHECK(std::abs(f.sum() - 1.0) < 1e-12);
        for (int y = 0; y < f.size(); ++y) {
          CHECK(std::abs(f[y] - static_cast<double>(ref[y])) < 1e-10);
          CHECK(all(i * inst.data.T + t, y) == doctest::Approx(f[y]).epsilon(1e-13));
        }
      }
  }
}

TEST_CASE("response configuration codes") {
  const std::vector<int> cats = {6, 3};
  CHECK(response_config_count(cats) == 18);
  for (int q = 0; q < 18; ++q) {
    const auto y = decode_response_config(cats, q);
    CHECK(encode_response_config(cats, y) == q);
  }
  CHECK(decode_response_config(cats, 4) == std::vector<int>{1, 1});
}

TEST_CASE("cached and direct evaluation agree") {
  const auto inst = oracle::random_instance(5, 3, {4}, 4, 6);
  const auto index = index_for_estimation(inst.data);
  const auto cache = ModelCache::build(inst.params, inst.data, index);
  Vec unit;
  const double ll = log_likelihood(inst.data, index, cache, &unit);
  CHECK(ll == doctest::Approx(log_likelihood(inst.data, inst.params)).epsilon(1e-14));
  CHECK(unit.sum() == doctest::Approx(ll).epsilon(1e-14));
}
