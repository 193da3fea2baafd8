// SPDX-License-Identifier: Apache-2.0
#include "rshmm/uncertainty.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rshmm/error.hpp"
#include "rshmm/simulator.hpp"
#include "text_io.hpp"

namespace rshmm {

namespace {

using ojson = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Embeds a coords x coords covariance into P x P with NaN elsewhere.
SeResult expand(SeMethod method, const Mat& sub, const std::vector<int>& coords, int P) {
  SeResult r;
  r.method = method;
  r.cov = Mat::Constant(P, P, kNaN);
  r.se = Vec::Constant(P, kNaN);
  const int m = static_cast<int>(coords.size());
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) r.cov(coords[a], coords[b]) = sub(a, b);
  for (int a = 0; a < m; ++a)
    if (sub(a, a) > 0.0) r.se[coords[a]] = std::sqrt(sub(a, a));
  return r;
}

SeResult from_information(SeMethod method, const Mat& info, const std::vector<int>& coords, int P) {
  const auto inv = symmetric_inverse(info);
  auto r = expand(method, inv.inverse, coords, P);
  r.singular = inv.singular;
  r.psd = inv.psd;
  r.condition = inv.condition;
  return r;
}

SeResult sandwich(const ScoreSet& sc, int P) {
  const auto jinv = symmetric_inverse(sc.oim);
  Mat cov = jinv.inverse * sc.opim * jinv.inverse;
  cov = 0.5 * (cov + cov.transpose());
  auto r = expand(SeMethod::SDW, cov, sc.coords, P);
  r.singular = jinv.singular;
  r.psd = jinv.psd;
  r.condition = jinv.condition;
  return r;
}

SeResult bootstrap(const PanelDataset& data, const ParamSet& params, const std::vector<int>& coords,
                   const BootConfig& boot) {
  if (boot.replicates < 2) raise(ErrorCode::InvalidArgument, "bootstrap needs at least 2 replicates");
  const int P = params.size();
  const int B = boot.replicates;
  FitConfig cfg = boot.fit;
  cfg.n_starts = 0;
  cfg.canonicalize = false;
  cfg.warm_starts = {params};

  Mat est(B, P);
  std::vector<char> kept(B, 0);
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < B; ++b) {
    try {
      const auto rep = parametric_bootstrap_panel(data, params, derive_seed(boot.seed, b));
      const auto f = fit(rep, params.spec(), cfg);
      if (f.converged) {
        est.row(b) = f.params.pack().transpose();
        kept[b] = 1;
      }
    } catch (const Error&) {
    }
  }
  std::vector<int> rows;
  for (int b = 0; b < B; ++b)
    if (kept[b]) rows.push_back(b);
  const int m = static_cast<int>(coords.size());
  Mat sub = Mat::Constant(m, m, kNaN);
  if (rows.size() >= 2) {
    Mat x(rows.size(), m);
    for (std::size_t q = 0; q < rows.size(); ++q)
      for (int c = 0; c < m; ++c) x(q, c) = est(rows[q], coords[c]);
    const Mat centered = x.rowwise() - x.colwise().mean();
    sub = centered.transpose() * centered / static_cast<double>(rows.size() - 1);
  }
  auto r = expand(SeMethod::BOOT, sub, coords, P);
  r.replicates = static_cast<int>(rows.size());
  r.dropped = B - r.replicates;
  return r;
}

}  // namespace

std::string to_string(SeMethod m) {
  switch (m) {
    case SeMethod::OIM: return "OIM";
    case SeMethod::OPIM: return "OPIM";
    case SeMethod::SDW: return "SDW";
    case SeMethod::BOOT: return "BOOT";
  }
  return "?";
}

SeMethod parse_se_method(const std::string& s) {
  std::string u;
  for (char c : s) u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "OIM") return SeMethod::OIM;
  if (u == "OPIM") return SeMethod::OPIM;
  if (u == "SDW") return SeMethod::SDW;
  if (u == "BOOT") return SeMethod::BOOT;
  raise(ErrorCode::InvalidArgument, "unknown standard-error method '" + s + "'");
}

SymmetricInverse symmetric_inverse(const Mat& m, double rel_tol) {
  SymmetricInverse out;
  const int d = static_cast<int>(m.rows());
  out.inverse = Mat::Zero(d, d);
  if (d == 0) return out;
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) raise(ErrorCode::NumericalFailure, "eigen-decomposition failed");
  const Vec& lam = eig.eigenvalues();
  const double top = lam.cwiseAbs().maxCoeff();
  const double low = lam.cwiseAbs().minCoeff();
  out.condition = low > 0.0 ? top / low : std::numeric_limits<double>::infinity();
  out.psd = lam.minCoeff() >= -rel_tol * top;
  Vec inv_lam = Vec::Zero(d);
  for (int q = 0; q < d; ++q) {
    if (std::abs(lam[q]) > rel_tol * top)
      inv_lam[q] = 1.0 / lam[q];
    else
      out.singular = true;
  }
  out.inverse = eig.eigenvectors() * inv_lam.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

ScoreSet score_set(const PanelDataset& data, const ParamSet& params, bool with_oim) {
  ScoreSet sc;
  sc.coords = unclamped_indices(params);
  sc.unit = unit_scores(data, params);
  sc.aggregate = sc.unit.colwise().sum().transpose();
  const int m = static_cast<int>(sc.coords.size());
  Mat s(data.n, m);
  for (int c = 0; c < m; ++c) s.col(c) = sc.unit.col(sc.coords[c]);
  sc.opim = s.transpose() * s;
  if (with_oim) {
    const auto index = index_for_estimation(data);
    const Mat jac = score_jacobian(data, index, params, sc.coords);
    sc.oim = -0.5 * (jac + jac.transpose());
  }
  return sc;
}

std::vector<SeResult> standard_errors(const PanelDataset& data, const ParamSet& params,
                                      const std::vector<SeMethod>& methods, const BootConfig& boot) {
  bool need_oim = false;
  for (auto m : methods) need_oim |= m == SeMethod::OIM || m == SeMethod::SDW;
  const auto sc = score_set(data, params, need_oim);
  const int P = params.size();
  std::vector<SeResult> out;
  for (auto m : methods) {
    switch (m) {
      case SeMethod::OPIM: out.push_back(from_information(m, sc.opim, sc.coords, P)); break;
      case SeMethod::OIM: out.push_back(from_information(m, sc.oim, sc.coords, P)); break;
      case SeMethod::SDW: out.push_back(sandwich(sc, P)); break;
      case SeMethod::BOOT: out.push_back(bootstrap(data, params, sc.coords, boot)); break;
    }
  }
  return out;
}

SeResult standard_errors(const PanelDataset& data, const ParamSet& params, SeMethod method,
                         const BootConfig& boot) {
  return standard_errors(data, params, std::vector<SeMethod>{method}, boot).front();
}

namespace {

struct Row {
  std::string block, name;
};

std::vector<Row> parameter_rows(const ParamSet& params, const CovariateNames& names) {
  const auto full = params.names(names);
  std::vector<Row> rows(full.size());
  for (const auto& ref : params.layout()) {
    const auto label = params.block_label(ref);
    for (int q = 0; q < ref.size; ++q) {
      const auto& f = full[ref.offset + q];
      rows[ref.offset + q] = {label, f.size() > label.size() + 1 ? f.substr(label.size() + 1) : f};
    }
  }
  return rows;
}

}  // namespace

std::string se_table_csv(const ParamSet& params, const std::vector<SeResult>& results,
                         const CovariateNames& names) {
  const auto rows = parameter_rows(params, names);
  const Vec theta = params.pack();
  std::ostringstream os;
  os << "block,parameter,estimate";
  for (const auto& r : results) os << ',' << to_string(r.method);
  os << '\n';
  for (std::size_t h = 0; h < rows.size(); ++h) {
    os << rows[h].block << ',' << rows[h].name << ',' << detail::format_double(theta[h]);
    for (const auto& r : results) os << ',' << detail::format_double(r.se[h]);
    os << '\n';
  }
  return os.str();
}

std::string se_table_json(const ParamSet& params, const std::vector<SeResult>& results,
                          const CovariateNames& names) {
  const auto rows = parameter_rows(params, names);
  const Vec theta = params.pack();
  auto num = [](double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); };
  ojson j;
  ojson methods = ojson::array();
  for (const auto& r : results) {
    ojson m;
    m["method"] = to_string(r.method);
    m["singular"] = r.singular;
    m["psd"] = r.psd;
    m["condition"] = num(r.condition);
    if (r.method == SeMethod::BOOT) {
      m["replicates"] = r.replicates;
      m["dropped"] = r.dropped;
    }
    methods.push_back(m);
  }
  j["methods"] = methods;
  ojson blocks = ojson::object();
  for (std::size_t h = 0; h < rows.size(); ++h) {
    ojson entry;
    entry["estimate"] = theta[h];
    for (const auto& r : results) entry[to_string(r.method)] = num(r.se[h]);
    blocks[rows[h].block][rows[h].name] = entry;
  }
  j["blocks"] = blocks;
  return j.dump(2) + "\n";
}

}  // namespace rshmm
