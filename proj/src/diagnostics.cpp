// SPDX-License-Identifier: Apache-2.0
#include "rshmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rshmm/error.hpp"
#include "text_io.hpp"

namespace rshmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSliceFloor = 1e-12;
constexpr double kExpectedFloor = 1e-10;

double normalized(double sum_max, double count, int classes) {
  if (classes < 2 || count <= 0.0) return kNaN;
  const double base = 1.0 / classes;
  return (sum_max - base * count) / ((1.0 - base) * count);
}

}  // namespace

double aic(double loglik, int n_par) { return -2.0 * loglik + 2.0 * n_par; }

double bic(double loglik, int n_par, int n) {
  if (n < 1) raise(ErrorCode::InvalidArgument, "bic needs n >= 1");
  return -2.0 * loglik + n_par * std::log(static_cast<double>(n));
}

double r_squared(double null_loglik, double loglik, int n, int r) {
  if (n < 1 || r < 1) raise(ErrorCode::InvalidArgument, "r_squared needs n, r >= 1");
  return 1.0 - std::exp(2.0 * (null_loglik - loglik) / (static_cast<double>(n) * r));
}

SIndices s_indices(const LatentPosteriors& post, int k, bool has_rs) {
  const int S = post.S;
  if (S != (has_rs ? 2 * k : k)) raise(ErrorCode::DimensionMismatch, "posteriors do not match k");
  SIndices out;
  out.S_U_given_L.assign(k, kNaN);
  out.skipped_U_given_L.assign(k, 0);
  const double pairs = static_cast<double>(post.n) * post.T;

  double all = 0.0, marg_L = 0.0, marg_U = 0.0, l_rs = 0.0, l_awr = 0.0;
  double n_rs = 0.0, n_awr = 0.0;
  std::vector<double> u_l(k, 0.0), n_u_l(k, 0.0);
  for (int i = 0; i < post.n; ++i)
    for (int t = 0; t < post.T; ++t) {
      auto d = [&](int u, int l) { return post.d1(i, t, has_rs ? u * k + l : l); };
      double best = 0.0;
      for (int s = 0; s < S; ++s) best = std::max(best, post.d1(i, t, s));
      all += best;
      double bl = 0.0;
      for (int l = 0; l < k; ++l) bl = std::max(bl, has_rs ? d(0, l) + d(1, l) : d(1, l));
      marg_L += bl;
      if (!has_rs) continue;

      double rs_mass = 0.0, awr_mass = 0.0;
      for (int l = 0; l < k; ++l) {
        rs_mass += d(0, l);
        awr_mass += d(1, l);
      }
      marg_U += std::max(rs_mass, awr_mass);
      auto cond_max = [&](int u, double mass, double& acc, double& cnt, int& skipped) {
        if (mass < kSliceFloor) {
          ++skipped;
          return;
        }
        double b = 0.0;
        for (int l = 0; l < k; ++l) b = std::max(b, d(u, l) / mass);
        acc += b;
        cnt += 1.0;
      };
      cond_max(0, rs_mass, l_rs, n_rs, out.skipped_L_RS);
      cond_max(1, awr_mass, l_awr, n_awr, out.skipped_L_AWR);
      for (int l = 0; l < k; ++l) {
        const double mass = d(0, l) + d(1, l);
        if (mass < kSliceFloor) {
          ++out.skipped_U_given_L[l];
          continue;
        }
        u_l[l] += std::max(d(0, l), d(1, l)) / mass;
        n_u_l[l] += 1.0;
      }
    }
  out.S = normalized(all, pairs, S);
  out.S_L = normalized(marg_L, pairs, k);
  if (has_rs) {
    out.S_U = normalized(marg_U, pairs, 2);
    out.S_L_RS = normalized(l_rs, n_rs, k);
    out.S_L_AWR = normalized(l_awr, n_awr, k);
    for (int l = 0; l < k; ++l) out.S_U_given_L[l] = normalized(u_l[l], n_u_l[l], 2);
  } else {
    out.S_U = out.S_L_RS = out.S_L_AWR = kNaN;
  }
  return out;
}

IndexReport fit_indices(const PanelDataset& data, const FitResult& fit, double null_loglik) {
  IndexReport rep;
  const auto post = posteriors(data, fit.params);
  rep.loglik = post.loglik;
  rep.null_loglik = null_loglik;
  rep.n_par = count_params(fit.params.spec(), fit.params.dims());
  rep.n = data.n;
  rep.r = data.r();
  rep.aic = aic(rep.loglik, rep.n_par);
  rep.bic = bic(rep.loglik, rep.n_par, rep.n);
  rep.r2 = r_squared(null_loglik, rep.loglik, rep.n, rep.r);
  rep.s = s_indices(post, fit.params.spec().k, fit.params.spec().has_rs);
  return rep;
}

std::string index_report_json(const IndexReport& rep) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json j;
  j["loglik"] = rep.loglik;
  j["null_loglik"] = rep.null_loglik;
  j["n_par"] = rep.n_par;
  j["n"] = rep.n;
  j["r"] = rep.r;
  j["AIC"] = rep.aic;
  j["BIC"] = rep.bic;
  j["R2"] = num(rep.r2);
  j["S"] = num(rep.s.S);
  j["S_L"] = num(rep.s.S_L);
  j["S_U"] = num(rep.s.S_U);
  j["S_L_RS"] = num(rep.s.S_L_RS);
  j["S_L_AWR"] = num(rep.s.S_L_AWR);
  auto arr = nlohmann::ordered_json::array();
  for (double v : rep.s.S_U_given_L) arr.push_back(num(v));
  j["S_U_given_L"] = arr;
  j["skipped"] = {{"L_RS", rep.s.skipped_L_RS},
                  {"L_AWR", rep.s.skipped_L_AWR},
                  {"U_given_L", rep.s.skipped_U_given_L}};
  return j.dump(2) + "\n";
}

namespace {

void finish_chi2(ResidualTable& table) {
  table.chi2.clear();
  const int C = table.configurations;
  for (std::size_t start = 0; start < table.cells.size(); start += C) {
    ConfigChiSquare g;
    g.t = table.cells[start].t;
    g.config = table.cells[start].config;
    double units = 0.0;
    for (int y = 0; y < C; ++y) {
      auto& cell = table.cells[start + y];
      units += cell.count;
      if (cell.expected < kExpectedFloor) {
        cell.residual = kNaN;
        ++g.na_cells;
        continue;
      }
      cell.residual = (cell.count - cell.expected) / std::sqrt(cell.expected);
      g.chi2 += cell.residual * cell.residual;
    }
    g.units = static_cast<int>(std::lround(units));
    g.average = g.chi2 / C;
    table.chi2.push_back(g);
  }
}

}  // namespace

ResidualTable residuals(const PanelDataset& data, const ParamSet& params) {
  ResidualTable table;
  table.categories = data.categories;
  for (int j = 0; j < data.r(); ++j) table.responses.push_back(j);
  const int C = response_config_count(data.categories);
  table.configurations = C;
  const Mat pmfs = full_conditional_pmfs(data, params);
  const auto cfg = index_configurations(data);
  for (int t = 0; t < data.T; ++t) {
    const auto& groups = cfg.by_time[t];
    for (int g = 0; g < groups.size(); ++g) {
      const std::size_t base = table.cells.size();
      for (int y = 0; y < C; ++y) table.cells.push_back({t, g, y, 0.0, 0.0, 0.0});
      for (int i : groups.members[g]) {
        table.cells[base + encode_response_config(data.categories, data.y_row(i, t))].count += 1.0;
        for (int y = 0; y < C; ++y) table.cells[base + y].expected += pmfs(i * data.T + t, y);
      }
    }
  }
  finish_chi2(table);
  return table;
}

ResidualTable marginalize(const ResidualTable& full, const std::vector<int>& subset) {
  if (subset.empty()) raise(ErrorCode::InvalidArgument, "empty response subset");
  std::vector<int> pos;
  for (int j : subset) {
    auto it = std::find(full.responses.begin(), full.responses.end(), j);
    if (it == full.responses.end()) raise(ErrorCode::InvalidArgument, "response not in the table");
    pos.push_back(static_cast<int>(it - full.responses.begin()));
  }
  ResidualTable out;
  out.responses = subset;
  for (int p : pos) out.categories.push_back(full.categories[p]);
  out.configurations = response_config_count(out.categories);
  const int C = full.configurations, Cm = out.configurations;
  std::vector<int> target(C);
  std::vector<int> ysub(pos.size());
  for (int y = 0; y < C; ++y) {
    const auto yy = decode_response_config(full.categories, y);
    for (std::size_t q = 0; q < pos.size(); ++q) ysub[q] = yy[pos[q]];
    target[y] = encode_response_config(out.categories, ysub);
  }
  for (std::size_t start = 0; start < full.cells.size(); start += C) {
    const std::size_t base = out.cells.size();
    for (int y = 0; y < Cm; ++y)
      out.cells.push_back({full.cells[start].t, full.cells[start].config, y, 0.0, 0.0, 0.0});
    for (int y = 0; y < C; ++y) {
      out.cells[base + target[y]].count += full.cells[start + y].count;
      out.cells[base + target[y]].expected += full.cells[start + y].expected;
    }
  }
  finish_chi2(out);
  return out;
}

double share_within(const ResidualTable& table, double bound) {
  std::size_t inside = 0, defined = 0;
  for (const auto& c : table.cells) {
    if (std::isnan(c.residual)) continue;
    ++defined;
    if (std::abs(c.residual) <= bound) ++inside;
  }
  return defined ? static_cast<double>(inside) / defined : kNaN;
}

std::string residuals_csv(const ResidualTable& table) {
  std::ostringstream os;
  os << "time,config,response_config,y,count,expected,residual\n";
  for (const auto& c : table.cells) {
    const auto y = decode_response_config(table.categories, c.y);
    std::string label;
    for (std::size_t j = 0; j < y.size(); ++j) label += (j ? "-" : "") + std::to_string(y[j] + 1);
    os << c.t + 1 << ',' << c.config + 1 << ',' << c.y + 1 << ',' << label << ','
       << detail::format_double(c.count) << ',' << detail::format_double(c.expected) << ','
       << detail::format_double(c.residual) << '\n';
  }
  return os.str();
}

std::string chi2_csv(const ResidualTable& table) {
  std::ostringstream os;
  os << "time,config,units,chi2,chi2_avg,na_cells\n";
  for (const auto& g : table.chi2)
    os << g.t + 1 << ',' << g.config + 1 << ',' << g.units << ',' << detail::format_double(g.chi2)
       << ',' << detail::format_double(g.average) << ',' << g.na_cells << '\n';
  return os.str();
}

}  // namespace rshmm
