// SPDX-License-Identifier: Apache-2.0
#include "rshmm/panel_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "rshmm/error.hpp"
#include "text_io.hpp"

namespace rshmm {

using nlohmann::json;

namespace {

std::vector<CovariateColumn> covariates_from_json(const json& j, const char* key) {
  std::vector<CovariateColumn> out;
  if (!j.contains(key)) return out;
  for (const auto& e : j.at(key)) {
    if (e.is_string()) {
      out.push_back({e.get<std::string>(), std::nullopt});
    } else {
      CovariateColumn c{e.at("column").get<std::string>(), std::nullopt};
      if (e.contains("level")) {
        const auto& lv = e.at("level");
        c.level = lv.is_string() ? lv.get<std::string>() : lv.dump();
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

json covariates_to_json(const std::vector<CovariateColumn>& cols) {
  json arr = json::array();
  for (const auto& c : cols) {
    if (c.level)
      arr.push_back({{"column", c.column}, {"level", *c.level}});
    else
      arr.push_back(c.column);
  }
  return arr;
}

std::vector<std::string> names_of(const std::vector<CovariateColumn>& cols) {
  std::vector<std::string> out;
  for (const auto& c : cols) out.push_back(c.name());
  return out;
}

bool lex_less(const Mat& m, int a, int b) {
  for (int c = 0; c < m.cols(); ++c) {
    if (m(a, c) < m(b, c)) return true;
    if (m(b, c) < m(a, c)) return false;
  }
  return false;
}

}  // namespace

PanelSchema PanelSchema::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorCode::Parse, std::string("schema: ") + e.what());
  }
  try {
    PanelSchema s;
    s.unit = j.value("unit", std::string("unit_id"));
    s.time = j.value("time", std::string("time"));
    for (const auto& r : j.at("responses"))
      s.responses.push_back({r.at("column").get<std::string>(), r.at("categories").get<int>()});
    s.x_L = covariates_from_json(j, "x_L");
    s.x_U = covariates_from_json(j, "x_U");
    s.z_L = covariates_from_json(j, "z_L");
    s.z_U = covariates_from_json(j, "z_U");
    if (s.responses.empty()) raise(ErrorCode::Parse, "schema declares no responses");
    for (const auto& r : s.responses)
      if (r.categories < 2)
        raise(ErrorCode::InvalidArgument, "response " + r.column + " needs at least 2 categories");
    return s;
  } catch (const json::exception& e) {
    raise(ErrorCode::Parse, std::string("schema: ") + e.what());
  }
}

PanelSchema PanelSchema::load(const std::string& path) {
  return from_json_text(detail::read_file(path));
}

std::string PanelSchema::to_json_text() const {
  json j;
  j["unit"] = unit;
  j["time"] = time;
  j["responses"] = json::array();
  for (const auto& r : responses)
    j["responses"].push_back({{"column", r.column}, {"categories", r.categories}});
  j["x_L"] = covariates_to_json(x_L);
  j["x_U"] = covariates_to_json(x_U);
  j["z_L"] = covariates_to_json(z_L);
  j["z_U"] = covariates_to_json(z_U);
  return j.dump(2) + "\n";
}

ModelDims PanelDataset::dims() const {
  return {categories, static_cast<int>(x_L.cols()), static_cast<int>(x_U.cols()),
          static_cast<int>(z_L.cols()), static_cast<int>(z_U.cols())};
}

void PanelDataset::validate(int min_T) const {
  if (n < 1) raise(ErrorCode::InvalidArgument, "panel needs at least one unit");
  if (T < min_T) raise(ErrorCode::InvalidArgument, "panel needs at least " + std::to_string(min_T) + " occasions");
  if (r() < 1) raise(ErrorCode::InvalidArgument, "panel needs at least one response");
  for (int c : categories)
    if (c < 2) raise(ErrorCode::InvalidArgument, "responses need at least 2 categories");
  if (y.size() != static_cast<std::size_t>(n) * T * r())
    raise(ErrorCode::DimensionMismatch, "response array has wrong size");
  if (x_L.rows() != n || x_U.rows() != n || z_L.rows() != n * T || z_U.rows() != n * T)
    raise(ErrorCode::DimensionMismatch, "covariate matrices have wrong row counts");
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < r(); ++j) {
        const int v = y_at(i, t, j);
        if (v < 0 || v >= categories[j])
          raise(ErrorCode::CategoryOutOfRange, "category outside 1.." + std::to_string(categories[j]));
      }
  for (const Mat* m : {&x_L, &x_U, &z_L, &z_U})
    if (!m->allFinite()) raise(ErrorCode::Parse, "non-finite covariate value");
}

PanelDataset PanelDataset::shaped(int n, int T, std::vector<int> categories, int p1_L, int p1_U,
                                  int p2_L, int p2_U) {
  PanelDataset d;
  d.n = n;
  d.T = T;
  d.categories = std::move(categories);
  for (int j = 0; j < d.r(); ++j) d.response_names.push_back("y" + std::to_string(j + 1));
  for (int i = 0; i < n; ++i) d.unit_ids.push_back(std::to_string(i + 1));
  for (int t = 0; t < T; ++t) d.times.push_back(t + 1);
  d.y.assign(static_cast<std::size_t>(n) * T * d.r(), 0);
  d.x_L = Mat::Zero(n, p1_L);
  d.x_U = Mat::Zero(n, p1_U);
  d.z_L = Mat::Zero(n * T, p2_L);
  d.z_U = Mat::Zero(n * T, p2_U);
  auto names = [](const char* prefix, int p) {
    std::vector<std::string> out;
    for (int h = 0; h < p; ++h) out.push_back(std::string(prefix) + std::to_string(h + 1));
    return out;
  };
  d.x_L_names = names("xL", p1_L);
  d.x_U_names = names("xU", p1_U);
  d.z_L_names = names("zL", p2_L);
  d.z_U_names = names("zU", p2_U);
  return d;
}

PanelDataset parse_panel(const std::string& csv_text, const PanelSchema& schema) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = detail::split_csv_line(line);
    break;
  }
  if (header.empty()) raise(ErrorCode::Parse, "empty CSV");
  std::unordered_map<std::string, int> col;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) col[header[c]] = c;
  auto find = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) raise(ErrorCode::Parse, "missing column " + name);
    return it->second;
  };
  const int unit_col = find(schema.unit);
  const int time_col = find(schema.time);
  std::vector<int> resp_cols;
  for (const auto& r : schema.responses) resp_cols.push_back(find(r.column));
  auto cov_cols = [&](const std::vector<CovariateColumn>& cs) {
    std::vector<int> out;
    for (const auto& c : cs) out.push_back(find(c.column));
    return out;
  };
  const auto xl_cols = cov_cols(schema.x_L), xu_cols = cov_cols(schema.x_U),
             zl_cols = cov_cols(schema.z_L), zu_cols = cov_cols(schema.z_U);

  struct Row {
    int unit;
    double time;
    std::vector<std::string> fields;
    int line_no;
  };
  std::vector<Row> rows;
  std::vector<std::string> unit_ids;
  std::unordered_map<std::string, int> unit_index;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      raise(ErrorCode::RaggedCovariates, "line " + std::to_string(line_no) + " has " +
                                             std::to_string(fields.size()) + " fields, expected " +
                                             std::to_string(header.size()));
    double tv;
    if (!detail::parse_double(fields[time_col], tv))
      raise(ErrorCode::Parse, "line " + std::to_string(line_no) + ": bad time value");
    const std::string& uid = fields[unit_col];
    auto [it, inserted] = unit_index.emplace(uid, static_cast<int>(unit_ids.size()));
    if (inserted) unit_ids.push_back(uid);
    rows.push_back({it->second, tv, std::move(fields), line_no});
  }
  if (rows.empty()) raise(ErrorCode::Parse, "CSV has no data rows");

  std::vector<double> times;
  for (const auto& r : rows) times.push_back(r.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  const int n = static_cast<int>(unit_ids.size());
  const int T = static_cast<int>(times.size());
  std::vector<int> categories;
  for (const auto& r : schema.responses) categories.push_back(r.categories);
  PanelDataset d = PanelDataset::shaped(n, T, categories, static_cast<int>(xl_cols.size()),
                                        static_cast<int>(xu_cols.size()),
                                        static_cast<int>(zl_cols.size()),
                                        static_cast<int>(zu_cols.size()));
  d.unit_ids = unit_ids;
  d.times = times;
  d.response_names.clear();
  for (const auto& r : schema.responses) d.response_names.push_back(r.column);
  d.x_L_names = names_of(schema.x_L);
  d.x_U_names = names_of(schema.x_U);
  d.z_L_names = names_of(schema.z_L);
  d.z_U_names = names_of(schema.z_U);

  std::vector<int> seen(static_cast<std::size_t>(n) * T, 0);
  auto cov_value = [](const Row& row, int c, const CovariateColumn& spec) {
    const std::string& f = row.fields[c];
    if (spec.level) return f == *spec.level ? 1.0 : 0.0;
    double v;
    if (f.empty())
      raise(ErrorCode::RaggedCovariates, "line " + std::to_string(row.line_no) + ": empty covariate " + spec.column);
    if (!detail::parse_double(f, v))
      raise(ErrorCode::Parse, "line " + std::to_string(row.line_no) + ": non-numeric covariate " + spec.column);
    return v;
  };
  for (const auto& row : rows) {
    const int i = row.unit;
    const int t = static_cast<int>(std::lower_bound(times.begin(), times.end(), row.time) - times.begin());
    if (seen[i * T + t]++)
      raise(ErrorCode::DuplicateCell, "unit " + unit_ids[i] + " has a repeated occasion");
    for (int j = 0; j < d.r(); ++j) {
      double v;
      const std::string& f = row.fields[resp_cols[j]];
      if (!detail::parse_double(f, v) || v != std::floor(v))
        raise(ErrorCode::NonIntegerCategory, "line " + std::to_string(row.line_no) + ": response " +
                                                 schema.responses[j].column + " = '" + f + "'");
      if (v < 1 || v > categories[j])
        raise(ErrorCode::CategoryOutOfRange, "line " + std::to_string(row.line_no) + ": response " +
                                                 schema.responses[j].column + " = " + f +
                                                 " outside 1.." + std::to_string(categories[j]));
      d.y_at(i, t, j) = static_cast<int>(v) - 1;
    }
    for (std::size_t h = 0; h < zl_cols.size(); ++h)
      d.z_L(i * T + t, h) = cov_value(row, zl_cols[h], schema.z_L[h]);
    for (std::size_t h = 0; h < zu_cols.size(); ++h)
      d.z_U(i * T + t, h) = cov_value(row, zu_cols[h], schema.z_U[h]);
    if (t == 0) {
      for (std::size_t h = 0; h < xl_cols.size(); ++h)
        d.x_L(i, h) = cov_value(row, xl_cols[h], schema.x_L[h]);
      for (std::size_t h = 0; h < xu_cols.size(); ++h)
        d.x_U(i, h) = cov_value(row, xu_cols[h], schema.x_U[h]);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t)
      if (!seen[i * T + t])
        raise(ErrorCode::MissingCell, "unit " + unit_ids[i] + " lacks occasion " +
                                          detail::format_double(times[t]));
  d.validate(2);
  return d;
}

PanelDataset load_panel(const std::string& csv_path, const PanelSchema& schema) {
  return parse_panel(detail::read_file(csv_path), schema);
}

namespace {

// Covariate columns of the written file: x blocks first, then z blocks. A
// name shared between blocks is written once when the values agree on every
// row, otherwise the later column gets a block prefix.
struct OutColumn {
  std::string name;
  const Mat* m;
  int col;
  bool per_occasion;
  bool written;
};

double out_value(const PanelDataset& d, const OutColumn& c, int i, int t) {
  return c.per_occasion ? (*c.m)(i * d.T + t, c.col) : (*c.m)(i, c.col);
}

std::vector<OutColumn> output_columns(const PanelDataset& d) {
  std::vector<OutColumn> out;
  auto agree = [&](const OutColumn& a, const OutColumn& b) {
    for (int i = 0; i < d.n; ++i)
      for (int t = 0; t < d.T; ++t)
        if (out_value(d, a, i, t) != out_value(d, b, i, t)) return false;
    return true;
  };
  auto add = [&](const std::vector<std::string>& names, const Mat& m, bool per_occ,
                 const char* prefix) {
    for (int h = 0; h < m.cols(); ++h) {
      OutColumn c{h < static_cast<int>(names.size()) ? names[h] : prefix + std::to_string(h + 1),
                  &m, h, per_occ, true};
      for (const auto& o : out) {
        if (o.name != c.name || !o.written) continue;
        if (agree(o, c))
          c.written = false;
        else
          c.name = std::string(prefix) + "_" + c.name;
        break;
      }
      out.push_back(c);
    }
  };
  add(d.x_L_names, d.x_L, false, "xL");
  add(d.x_U_names, d.x_U, false, "xU");
  add(d.z_L_names, d.z_L, true, "zL");
  add(d.z_U_names, d.z_U, true, "zU");
  return out;
}

}  // namespace

std::string panel_to_csv(const PanelDataset& d) {
  const auto cols = output_columns(d);
  std::string out = "unit_id,time";
  for (const auto& name : d.response_names) out += "," + name;
  for (const auto& c : cols)
    if (c.written) out += "," + c.name;
  out += "\n";
  for (int i = 0; i < d.n; ++i)
    for (int t = 0; t < d.T; ++t) {
      out += d.unit_ids[i] + "," + detail::format_double(d.times[t]);
      for (int j = 0; j < d.r(); ++j) out += "," + std::to_string(d.y_at(i, t, j) + 1);
      for (const auto& c : cols)
        if (c.written) out += "," + detail::format_double(out_value(d, c, i, t));
      out += "\n";
    }
  return out;
}

PanelSchema panel_schema(const PanelDataset& d) {
  PanelSchema s;
  s.unit = "unit_id";
  s.time = "time";
  for (int j = 0; j < d.r(); ++j) s.responses.push_back({d.response_names[j], d.categories[j]});
  for (const auto& c : output_columns(d)) {
    std::vector<CovariateColumn>* dst = nullptr;
    if (c.m == &d.x_L) dst = &s.x_L;
    if (c.m == &d.x_U) dst = &s.x_U;
    if (c.m == &d.z_L) dst = &s.z_L;
    if (c.m == &d.z_U) dst = &s.z_U;
    dst->push_back({c.name, std::nullopt});
  }
  return s;
}

void write_panel(const PanelDataset& data, const std::string& csv_path,
                 const std::string& schema_path) {
  const std::string csv = panel_to_csv(data);
  const std::string schema = panel_schema(data).to_json_text();
  detail::write_file_atomic(csv_path, csv);
  detail::write_file_atomic(schema_path, schema);
}

RowGroups group_rows(const Mat& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lex_less(m, a, b); });
  RowGroups g;
  g.group_of.assign(n, -1);
  std::vector<int> reps;
  for (int idx = 0; idx < n; ++idx) {
    const int row = order[idx];
    if (reps.empty() || lex_less(m, reps.back(), row)) {
      reps.push_back(row);
      g.members.emplace_back();
    }
    g.group_of[row] = static_cast<int>(reps.size()) - 1;
    g.members.back().push_back(row);
  }
  for (auto& mem : g.members) std::sort(mem.begin(), mem.end());
  g.rows.resize(static_cast<Eigen::Index>(reps.size()), m.cols());
  for (std::size_t q = 0; q < reps.size(); ++q) g.rows.row(q) = m.row(reps[q]);
  return g;
}

CovariateConfigIndex index_configurations(const PanelDataset& d) {
  CovariateConfigIndex idx;
  const int p1U = static_cast<int>(d.x_U.cols()), p1L = static_cast<int>(d.x_L.cols());
  const int p2U = static_cast<int>(d.z_U.cols()), p2L = static_cast<int>(d.z_L.cols());
  for (int t = 0; t < d.T; ++t) {
    const int width = t == 0 ? p1U + p1L : p1U + p2U + p1L + p2L;
    Mat keys(d.n, width);
    for (int i = 0; i < d.n; ++i) {
      int c = 0;
      keys.row(i).segment(c, p1U) = d.x_U.row(i);
      c += p1U;
      if (t > 0) {
        keys.row(i).segment(c, p2U) = d.z_U.row(i * d.T + t);
        c += p2U;
      }
      keys.row(i).segment(c, p1L) = d.x_L.row(i);
      c += p1L;
      if (t > 0) keys.row(i).segment(c, p2L) = d.z_L.row(i * d.T + t);
    }
    idx.by_time.push_back(group_rows(keys));
  }
  return idx;
}

EstimationIndex index_for_estimation(const PanelDataset& d) {
  EstimationIndex idx;
  idx.init_L = group_rows(d.x_L);
  idx.init_U = group_rows(d.x_U);
  Mat joint(d.n, d.x_L.cols() + d.x_U.cols());
  joint << d.x_L, d.x_U;
  idx.init_joint = group_rows(joint);

  const int m = d.n * (d.T - 1);
  Mat zl(m, d.z_L.cols()), zu(m, d.z_U.cols());
  for (int i = 0; i < d.n; ++i)
    for (int t = 1; t < d.T; ++t) {
      zl.row(i * (d.T - 1) + t - 1) = d.z_L.row(i * d.T + t);
      zu.row(i * (d.T - 1) + t - 1) = d.z_U.row(i * d.T + t);
    }
  idx.trans_L = group_rows(zl);
  idx.trans_U = group_rows(zu);
  Mat zj(m, zl.cols() + zu.cols());
  zj << zl, zu;
  idx.trans_joint = group_rows(zj);
  return idx;
}

}  // namespace rshmm
