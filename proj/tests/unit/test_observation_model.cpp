// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rshmm/error.hpp"
#include "rshmm/observation_model.hpp"
#include "rshmm/hmm_core.hpp"

using namespace rshmm;

namespace {

int argmax(const Vec& v) {
  Eigen::Index m;
  v.maxCoeff(&m);
  return static_cast<int>(m);
}

}  // namespace

TEST_CASE("ternary score") {
  CHECK(score_function(6, 1) == 1);
  CHECK(score_function(6, 2) == 1);
  CHECK(score_function(6, 3) == 0);
  CHECK(score_function(6, 4) == -1);
  CHECK(score_function(6, 5) == -1);
  CHECK(score_function(3, 1) == 1);
  CHECK(score_function(3, 2) == -1);
  for (int y = 1; y <= 4; ++y) CHECK(score_function(5, y) == (y <= 2 ? 1 : -1));
  CHECK_THROWS_AS(score_function(6, 0), Error);
  CHECK_THROWS_AS(score_function(6, 6), Error);
}

TEST_CASE("RS pmf") {
  for (int c = 2; c <= 8; ++c) {
    const Vec f = rs_pmf(c, 0.0, 0.0);
    for (int y = 0; y < c; ++y) CHECK(f[y] == doctest::Approx(1.0 / c).epsilon(1e-14));
  }
  const Vec f = rs_pmf(6, 0.0, 1.0);
  const double e = std::exp(1.0), e2 = std::exp(2.0), z = 2 + 2 * e + 2 * e2;
  const std::vector<double> expect = {1 / z, e / z, e2 / z, e2 / z, e / z, 1 / z};
  for (int y = 0; y < 6; ++y) CHECK(f[y] == doctest::Approx(expect[y]).epsilon(1e-13));
  CHECK(f[0] == doctest::Approx(0.0450).epsilon(1e-2));
  CHECK(f[1] == doctest::Approx(0.1224).epsilon(1e-3));
  CHECK(f[2] == doctest::Approx(0.3326).epsilon(1e-3));
  CHECK(argmax(rs_pmf(3, 2.0, 1.0)) == 2);
}

TEST_CASE("RS pmf adjacent ratios [property]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int c = 2 + static_cast<int>(rng() % 7);
    const double a = u(rng), b = u(rng);
    const Vec f = rs_pmf(c, a, b);
    CHECK(std::abs(f.sum() - 1.0) < 1e-12);
    for (int y = 1; y < c; ++y)
      CHECK(std::log(f[y] / f[y - 1]) == doctest::Approx(a + b * score_function(c, y)).scale(1.0));
  }
}

TEST_CASE("mode classes") {
  CHECK(rs_mode_class(6, 3.8061, 2.9025).label == ModeClass::ARS);
  const auto ers = rs_mode_class(6, 0.0, -1.0);
  CHECK(ers.label == ModeClass::ERS);
  CHECK(ers.tie);
  const Vec f = rs_pmf(6, 0.0, -1.0);
  CHECK(f[0] == doctest::Approx(f[5]).epsilon(1e-14));
  CHECK(rs_mode_class(6, 0.0, 0.0).label == ModeClass::CRS);
  CHECK(rs_mode_class(3, -2.0, 1.0).label == ModeClass::DRS);
  CHECK(rs_mode_class(5, 0.5, 1.0).label == ModeClass::MRS);
  CHECK(rs_mode_class(5, 1.0, 1.0).tie);
  CHECK(to_string(ModeClass::MRS) == "MRS");
}

TEST_CASE("mode rules agree with the pmf argmax on a grid [property]") {
  for (int c : {3, 4, 5, 6, 7})
    for (double a = -5.0; a <= 5.0; a += 0.25)
      for (double b = -5.0; b <= 5.0; b += 0.25) {
        const auto m = rs_mode_class(c, a, b);
        if (m.tie || m.label == ModeClass::CRS) continue;
        CAPTURE(c);
        CAPTURE(a);
        CAPTURE(b);
        const Vec f = rs_pmf(c, a, b);
        const int top = argmax(f);
        switch (m.label) {
          case ModeClass::ARS: CHECK(top == c - 1); break;
          case ModeClass::DRS: CHECK(top == 0); break;
          case ModeClass::MRS:
            CHECK(top > 0);
            CHECK(top < c - 1);
            CHECK(std::abs(top - (c - 1) / 2.0) <= 0.5);
            break;
          case ModeClass::ERS: {
            CHECK((top == 0 || top == c - 1));
            const int low = static_cast<int>(std::distance(f.data(), std::min_element(f.data(), f.data() + c)));
            CHECK(low > 0);
            CHECK(low < c - 1);
            break;
          }
          default: break;
        }
      }
}

TEST_CASE("RS pmf shape properties [property]") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int c = 2 + static_cast<int>(rng() % 7);
    const double b = u(rng);
    SUBCASE("palindromic at zero intercept") {
      const Vec f = rs_pmf(c, 0.0, b);
      for (int y = 0; y < c; ++y) CHECK(f[y] == doctest::Approx(f[c - 1 - y]).epsilon(1e-12));
    }
    SUBCASE("positive intercept dominates stochastically") {
      const Vec f0 = rs_pmf(c, 0.0, b), f1 = rs_pmf(c, std::abs(u(rng)) + 0.01, b);
      double c0 = 0.0, c1 = 0.0;
      for (int y = 0; y + 1 < c; ++y) {
        c0 += f0[y];
        c1 += f1[y];
        CHECK(c1 < c0 + 1e-15);
      }
    }
    SUBCASE("larger score coefficient concentrates on the middle") {
      if (c < 3) continue;
      const double lo = u(rng), hi = lo + 0.1 + std::abs(u(rng));
      const int mid = (c - 1) / 2;
      const Vec a = rs_pmf(c, 0.0, lo), z = rs_pmf(c, 0.0, hi);
      CHECK(z[mid] / z[0] > a[mid] / a[0]);
    }
  }
}

TEST_CASE("AWR pmf") {
  const Vec uni = awr_pmf(Vec::Zero(4));
  for (int y = 0; y < 5; ++y) CHECK(uni[y] == doctest::Approx(0.2));
  Vec phi(2);
  phi << std::log(2.0), std::log(3.0);
  const Vec f = awr_pmf(phi);
  CHECK(f[0] == doctest::Approx(1.0 / 9).epsilon(1e-14));
  CHECK(f[1] == doctest::Approx(2.0 / 9).epsilon(1e-14));
  CHECK(f[2] == doctest::Approx(6.0 / 9).epsilon(1e-14));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int rep = 0; rep < 100; ++rep) {
    Vec l(1 + rng() % 6);
    for (auto& v : l) v = u(rng);
    const Vec p = awr_pmf(l);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK((awr_logits(p) - l).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("emission vectors") {
  SUBCASE("single response reduces to the pmf") {
    auto obs = ObservationParams::make(2, true, {4});
    obs.rs_block(1, 0).coef << 0.4, -0.7;
    obs.awr_block(0, 0).coef << 0.1, 0.2, -1.0;
    const std::vector<int> y = {3};
    const Vec e = emission_matrix(obs, y);
    REQUIRE(e.size() == 4);
    CHECK(e[1] == doctest::Approx(rs_pmf(4, 0.4, -0.7)[2]));
    CHECK(e[2] == doctest::Approx(awr_pmf(obs.awr_block(0, 0).coef)[2]));
    CHECK(e[0] == doctest::Approx(0.25));
  }
  SUBCASE("zero parameters give uniform products") {
    const auto obs = ObservationParams::make(3, true, {6, 3});
    const std::vector<int> y = {5, 2};
    const Vec e = emission_matrix(obs, y);
    for (int s = 0; s < 6; ++s) CHECK(e[s] == doctest::Approx(1.0 / 18).epsilon(1e-14));
  }
  SUBCASE("summing over every response configuration gives ones [property]") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.5);
    for (int rep = 0; rep < 20; ++rep) {
      const std::vector<int> cats = {2 + static_cast<int>(rng() % 4), 2 + static_cast<int>(rng() % 3)};
      auto obs = ObservationParams::make(2, true, cats);
      for (auto& b : obs.rs)
        for (auto& v : b.coef) v = g(rng);
      for (auto& b : obs.awr)
        for (auto& v : b.coef) v = g(rng);
      Vec total = Vec::Zero(4);
      const int C = response_config_count(cats);
      for (int q = 0; q < C; ++q) {
        auto cfg = decode_response_config(cats, q);
        for (auto& v : cfg) ++v;
        const Vec e = emission_matrix(obs, cfg);
        CHECK(e.maxCoeff() <= 1.0);
        CHECK(e.minCoeff() > 0.0);
        total += e;
      }
      CHECK((total.array() - 1.0).abs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("table and direct evaluation agree") {
    auto obs = ObservationParams::make(2, true, {5, 3});
    obs.rs_block(0, 1).coef << -1.0, 2.0;
    obs.awr_block(1, 0).coef << 1.0, 0.0, -2.0, 0.5;
    const EmissionTable table(obs);
    const std::vector<int> y0 = {4, 0}, y1 = {5, 1};
    Vec out(4);
    table.log_emission(y0, out);
    CHECK((out.array().exp().matrix() - emission_matrix(obs, y1)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("without the RS component there are k states") {
    const auto obs = ObservationParams::make(3, false, {4});
    CHECK(obs.rs.empty());
    CHECK(EmissionTable(obs).states() == 3);
  }
}
