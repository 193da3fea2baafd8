// SPDX-License-Identifier: Apache-2.0
#include "rshmm/simulator.hpp"

#include <random>
#include <sstream>

#include "rshmm/em_fit.hpp"
#include "rshmm/error.hpp"
#include "rshmm/hmm_core.hpp"
#include "text_io.hpp"

namespace rshmm {

namespace {

constexpr std::uint64_t kCovariateStream = 0x636f76ULL;
constexpr std::uint64_t kResponseStream = 0x726573ULL;

int draw(const double* p, int m, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (int c = 0; c < m; ++c) {
    acc += p[c];
    if (u < acc) return c;
  }
  return m - 1;
}

// Draws responses and latent paths for every unit of `data` (covariates read,
// responses overwritten).
void draw_responses(PanelDataset& data, const ParamSet& params, std::uint64_t seed,
                    std::vector<int>* path_u, std::vector<int>* path_l) {
  const int n = data.n, T = data.T, r = data.r();
  const auto& spec = params.spec();
  const int k = spec.k, S = spec.joint_states();
  const auto index = index_for_estimation(data);
  const auto cache = ModelCache::build(params, data, index);

  // pmf[(s * r + j)][y]
  std::vector<std::vector<double>> pmf(static_cast<std::size_t>(S) * r);
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < r; ++j) {
      const Vec lp = params.obs.log_pmf(s, j);
      auto& row = pmf[s * r + j];
      row.resize(lp.size());
      for (int y = 0; y < lp.size(); ++y) row[y] = std::exp(lp[y]);
    }

  if (path_u) path_u->assign(static_cast<std::size_t>(n) * T, 1);
  if (path_l) path_l->assign(static_cast<std::size_t>(n) * T, 0);
  const std::uint64_t base = derive_seed(seed, kResponseStream);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    const Vec& init = cache.initial(index, i);
    int s = draw(init.data(), S, rng);
    for (int t = 0;; ++t) {
      for (int j = 0; j < r; ++j) {
        const auto& p = pmf[s * r + j];
        data.y_at(i, t, j) = draw(p.data(), static_cast<int>(p.size()), rng);
      }
      if (path_u) (*path_u)[i * T + t] = spec.has_rs ? s / k : 1;
      if (path_l) (*path_l)[i * T + t] = s % k;
      if (t + 1 == T) break;
      const Mat& gamma = cache.kernel(index, T, i, t + 1);
      Vec row = gamma.row(s).transpose();
      s = draw(row.data(), S, rng);
    }
  }
}

}  // namespace

PanelDataset generate_covariates(int n, int T, const std::vector<int>& categories,
                                 const ModelDims& dims, const std::vector<double>& prevalences,
                                 const std::vector<std::string>& names, std::uint64_t seed) {
  const int width = static_cast<int>(prevalences.size());
  for (int p : {dims.p1_L, dims.p1_U, dims.p2_L, dims.p2_U})
    if (p > width)
      raise(ErrorCode::DimensionMismatch, "more covariates requested than prevalences given");
  for (double q : prevalences)
    if (!(q >= 0.0 && q <= 1.0)) raise(ErrorCode::InvalidArgument, "prevalence outside [0, 1]");

  auto data = PanelDataset::shaped(n, T, categories, dims.p1_L, dims.p1_U, dims.p2_L, dims.p2_U);
  Mat profile(n, width);
  const std::uint64_t base = derive_seed(seed, kCovariateStream);
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int c = 0; c < width; ++c) profile(i, c) = unif(rng) < prevalences[c] ? 1.0 : 0.0;
  }
  data.x_L = profile.leftCols(dims.p1_L);
  data.x_U = profile.leftCols(dims.p1_U);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t) {
      data.z_L.row(i * T + t) = profile.row(i).head(dims.p2_L);
      data.z_U.row(i * T + t) = profile.row(i).head(dims.p2_U);
    }
  if (static_cast<int>(names.size()) >= width) {
    auto head = [&](int p) { return std::vector<std::string>(names.begin(), names.begin() + p); };
    data.x_L_names = head(dims.p1_L);
    data.x_U_names = head(dims.p1_U);
    data.z_L_names = head(dims.p2_L);
    data.z_U_names = head(dims.p2_U);
  }
  return data;
}

SimResult simulate(const SimConfig& config) {
  const auto& dims = config.params.dims();
  config.params.spec().validate();
  SimResult out;
  if (config.covariates) {
    out.data = *config.covariates;
    if (!(out.data.dims() == dims))
      raise(ErrorCode::DimensionMismatch, "covariate design does not match the parameters");
  } else {
    if (config.n < 1 || config.T < 1) raise(ErrorCode::InvalidArgument, "n and T must be positive");
    std::vector<double> prev = config.prevalences;
    if (prev.empty()) prev = shiw_prevalences();
    out.data = generate_covariates(config.n, config.T, dims.categories, dims, prev,
                                   config.covariate_names.empty() && config.prevalences.empty()
                                       ? shiw_covariate_names()
                                       : config.covariate_names,
                                   config.seed);
  }
  draw_responses(out.data, config.params, config.seed, &out.path_u, &out.path_l);
  return out;
}

PanelDataset parametric_bootstrap_panel(const PanelDataset& data, const ParamSet& params,
                                        std::uint64_t seed) {
  if (!(data.dims() == params.dims()))
    raise(ErrorCode::DimensionMismatch, "parameters do not match the data dimensions");
  PanelDataset rep = data;
  draw_responses(rep, params, seed, nullptr, nullptr);
  return rep;
}

std::vector<double> shiw_prevalences() { return {0.27, 0.10, 0.47, 0.34, 0.22, 0.83, 0.62}; }

std::vector<std::string> shiw_covariate_names() { return {"G", "Jse", "Jhrs", "CH", "D", "S", "E"}; }

ParamSet shiw_truth() {
  ModelDims dims{{6, 3}, 7, 7, 7, 0};
  auto params = ParamSet::make(variant_spec("M8", 3), dims);
  auto& lat = params.latent;

  // Initial construct logits: stereotype with scores (0, 1, 1.7).
  lat.init_L.score[2] = 1.7;
  lat.init_L.intercept << 0.0, 2.042, 3.140;
  lat.init_L.shared << 0.224, -1.045, -0.504, -0.211, -0.043, -1.150, -1.343;

  lat.init_U.intercept << 0.0, -0.201;
  lat.init_U.slopes.row(1) << -0.390, 0.181, -0.138, -0.244, 0.108, 0.280, 0.739;

  // Parallel-baseline rows: one intercept per destination, one shared slope.
  // Leaving the top state is rare; its row is kept away from the bound.
  const double intercepts[3][3] = {{0.0, -0.699, -1.839}, {-4.170, 0.0, -2.540}, {-4.5, -3.5, 0.0}};
  const double slopes[3][7] = {{1.448, 0.640, -0.362, -0.954, 0.842, -2.327, -1.652},
                               {0.905, 1.871, -0.340, -0.283, 0.041, -2.583, 1.248},
                               {0.237, 0.838, -0.021, 0.361, 0.297, 1.5, 0.624}};
  for (int lb = 0; lb < 3; ++lb) {
    auto& b = lat.trans_L[lb];
    for (int l = 0; l < 3; ++l) b.intercept[l] = intercepts[lb][l];
    for (int c = 0; c < 7; ++c) b.shared[c] = slopes[lb][c];
  }

  // Homogeneous RS transitions, block index from (l, ubar): logit of AWR.
  const double from_rs[3] = {-3.0, -3.5, -4.0};
  const double from_awr[3] = {1.964, 2.563, 2.821};
  for (int l = 0; l < 3; ++l) {
    lat.trans_U[params.spec().rs_block_index(l, 0)].intercept[1] = from_rs[l];
    lat.trans_U[params.spec().rs_block_index(l, 1)].intercept[1] = from_awr[l];
  }

  const double rs_phi[2][3][2] = {{{-1.4642, 2.5575}, {1.2743, 2.2705}, {3.8061, 2.9025}},
                                  {{1.4101, 0.4533}, {-1.5093, -0.4743}, {-0.9618, -0.1526}}};
  for (int l = 0; l < 3; ++l)
    for (int j = 0; j < 2; ++j) params.obs.rs_block(l, j).coef << rs_phi[j][l][0], rs_phi[j][l][1];

  // AWR pmfs: response 1 shifts upward with the state, response 2 keeps its
  // mode at the middle category.
  const std::vector<std::vector<Vec>> awr = {
      {(Vec(6) << 0.08, 0.30, 0.42, 0.15, 0.04, 0.01).finished(),
       (Vec(6) << 0.02, 0.08, 0.38, 0.36, 0.12, 0.04).finished(),
       (Vec(6) << 0.01, 0.03, 0.12, 0.36, 0.33, 0.15).finished()},
      {(Vec(3) << 0.10, 0.55, 0.35).finished(), (Vec(3) << 0.40, 0.50, 0.10).finished(),
       (Vec(3) << 0.22, 0.56, 0.22).finished()}};
  for (int l = 0; l < 3; ++l)
    for (int j = 0; j < 2; ++j) params.obs.awr_block(l, j).coef = awr_logits(awr[j][l]);
  return params;
}

std::string paths_csv(const SimResult& sim) {
  std::ostringstream os;
  os << "unit_id,time,u,l\n";
  const auto& d = sim.data;
  for (int i = 0; i < d.n; ++i)
    for (int t = 0; t < d.T; ++t)
      os << d.unit_ids[i] << ',' << detail::format_double(d.times[t]) << ','
         << sim.path_u[i * d.T + t] + 1 << ',' << sim.path_l[i * d.T + t] + 1 << '\n';
  return os.str();
}

}  // namespace rshmm
