// SPDX-License-Identifier: Apache-2.0
#include "rshmm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rshmm/error.hpp"
#include "text_io.hpp"

namespace rshmm {

std::vector<ModelSpec> variant_grid(const std::vector<std::string>& variants,
                                    const std::vector<int>& ks) {
  std::vector<ModelSpec> grid;
  for (const auto& v : variants)
    for (int k : ks) grid.push_back(variant_spec(v, k));
  return grid;
}

SelectionResult select_models(const PanelDataset& data, const std::vector<ModelSpec>& grid,
                              const FitConfig& config) {
  if (grid.empty()) raise(ErrorCode::InvalidArgument, "empty model grid");
  SelectionResult res;
  res.rows.resize(grid.size());
  res.fits.resize(grid.size());
  res.null_loglik = fit_null(data).loglik;
  const auto dims = data.dims();

  std::vector<int> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (grid[a].k != grid[b].k) return grid[a].k < grid[b].k;
    return count_params(grid[a], dims) < count_params(grid[b], dims);
  });

  for (std::size_t q = 0; q < order.size(); ++q) {
    const int c = order[q];
    auto& row = res.rows[c];
    row.spec = grid[c];
    FitConfig cfg = config;
    for (std::size_t e = 0; e < q; ++e) {
      const int prev = order[e];
      if (!res.rows[prev].ok || grid[prev].k != grid[c].k || grid[prev].has_rs != grid[c].has_rs)
        continue;
      ParamSet probe = ParamSet::make(grid[c], dims);
      if (embed(res.fits[prev].params, probe)) cfg.warm_starts.push_back(res.fits[prev].params);
    }
    try {
      row.n_par = count_params(grid[c], dims);
      res.fits[c] = fit(data, grid[c], cfg);
      const auto rep = fit_indices(data, res.fits[c], res.null_loglik);
      row.loglik = res.fits[c].loglik;
      row.bic = rep.bic;
      row.s_k = rep.s.S;
      row.r2 = rep.r2;
      row.converged = res.fits[c].converged;
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
  }
  for (std::size_t c = 0; c < res.rows.size(); ++c) {
    if (!res.rows[c].ok) continue;
    if (res.best < 0 || res.rows[c].bic < res.rows[res.best].bic) res.best = static_cast<int>(c);
  }
  if (res.best >= 0) res.rows[res.best].best = true;
  return res;
}

std::string selection_csv(const SelectionResult& res) {
  std::ostringstream os;
  os << "Model,pi_L,pi_UL,k,loglike,n_par,BIC,S_k,R2\n";
  auto num = [](bool ok, double v) { return ok ? detail::format_double(v) : std::string("NA"); };
  for (const auto& r : res.rows) {
    const std::string name = r.spec.label.empty() ? "custom" : r.spec.label;
    os << name << (r.best ? "*" : "") << ',' << to_string(r.spec.trans_L) << ','
       << (r.spec.has_rs ? to_string(r.spec.rs_trans) : "none") << ',' << r.spec.k << ','
       << num(r.ok, r.loglik) << ',' << r.n_par << ',' << num(r.ok, r.bic) << ','
       << num(r.ok, r.s_k) << ',' << num(r.ok, r.r2) << '\n';
  }
  return os.str();
}

std::string selection_json(const SelectionResult& res) {
  using ojson = nlohmann::ordered_json;
  auto num = [](bool ok, double v) { return ok && std::isfinite(v) ? ojson(v) : ojson(nullptr); };
  ojson j;
  j["null_loglik"] = res.null_loglik;
  j["best"] = res.best >= 0 ? ojson(res.best) : ojson(nullptr);
  ojson rows = ojson::array();
  for (const auto& r : res.rows) {
    ojson o;
    o["model"] = r.spec.label;
    o["spec"] = ojson::parse(spec_to_json(r.spec));
    o["k"] = r.spec.k;
    o["loglike"] = num(r.ok, r.loglik);
    o["n_par"] = r.n_par;
    o["BIC"] = num(r.ok, r.bic);
    o["S_k"] = num(r.ok, r.s_k);
    o["R2"] = num(r.ok, r.r2);
    o["converged"] = r.converged;
    o["best"] = r.best;
    if (!r.ok) o["error"] = r.error;
    rows.push_back(o);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace rshmm
