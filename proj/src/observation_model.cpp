// SPDX-License-Identifier: Apache-2.0
#include "rshmm/observation_model.hpp"

#include <cmath>

#include "rshmm/error.hpp"

namespace rshmm {

int score_function(int c, int y) {
  if (y < 1 || y > c - 1)
    raise(ErrorCode::InvalidArgument,
          "score defined for categories 1..c-1, got " + std::to_string(y));
  // Compare 2y with c to stay in integers.
  if (2 * y < c) return 1;
  if (2 * y == c) return 0;
  return -1;
}

Mat rs_design(int c) {
  Mat d = Mat::Zero(c, 2);
  int cum = 0;
  for (int y = 2; y <= c; ++y) {
    cum += score_function(c, y - 1);
    d(y - 1, 0) = y - 1;
    d(y - 1, 1) = cum;
  }
  return d;
}

Mat awr_design(int c) {
  Mat d = Mat::Zero(c, c - 1);
  for (int y = 1; y < c; ++y)
    for (int h = 0; h < y; ++h) d(y, h) = 1.0;
  return d;
}

Vec rs_pmf(int c, double phi0, double phi1) {
  Vec eta = rs_design(c) * Eigen::Vector2d(phi0, phi1);
  log_normalize(eta);
  return eta.array().exp();
}

Vec awr_pmf(const VecRef& logits) {
  const int c = static_cast<int>(logits.size()) + 1;
  Vec eta = awr_design(c) * logits;
  log_normalize(eta);
  return eta.array().exp();
}

Vec awr_logits(const VecRef& pmf) {
  const int c = static_cast<int>(pmf.size());
  Vec out(c - 1);
  for (int y = 0; y + 1 < c; ++y) out[y] = std::log(pmf[y + 1]) - std::log(pmf[y]);
  return out;
}

std::string to_string(ModeClass m) {
  switch (m) {
    case ModeClass::ARS: return "ARS";
    case ModeClass::DRS: return "DRS";
    case ModeClass::MRS: return "MRS";
    case ModeClass::ERS: return "ERS";
    case ModeClass::CRS: return "CRS";
  }
  return "?";
}

ModeClassification rs_mode_class(int c, double phi0, double phi1) {
  ModeClassification out;
  if (phi0 == 0.0 && phi1 == 0.0) return {ModeClass::CRS, false};
  if (phi1 > 0.0) {
    if (phi0 < -phi1) return {ModeClass::DRS, false};
    if (phi0 > phi1) return {ModeClass::ARS, false};
    // Inside the band, or on one of its edges where the middle mode is shared
    // with every category on the outer side.
    out.label = ModeClass::MRS;
    out.tie = (phi0 == phi1) || (phi0 == -phi1) || (c % 2 == 0 && phi0 == 0.0);
    return out;
  }
  if (phi1 < 0.0) {
    if (phi0 <= phi1) return {ModeClass::DRS, false};
    if (phi0 >= -phi1) return {ModeClass::ARS, false};
    return {ModeClass::ERS, phi0 == 0.0};
  }
  return {phi0 > 0.0 ? ModeClass::ARS : ModeClass::DRS, false};
}

ObservationParams ObservationParams::make(int k, bool has_rs, std::vector<int> categories) {
  ObservationParams obs;
  obs.k = k;
  obs.has_rs = has_rs;
  obs.categories = std::move(categories);
  for (int l = 0; l < k; ++l) {
    for (int c : obs.categories) {
      if (c < 2) raise(ErrorCode::InvalidArgument, "responses need at least 2 categories");
      if (has_rs) obs.rs.push_back(LogitBlock::make_design(rs_design(c)));
      obs.awr.push_back(LogitBlock::make_design(awr_design(c)));
    }
  }
  return obs;
}

Vec ObservationParams::log_pmf(int s, int j) const {
  const Vec none;
  if (!has_rs) return awr_block(s, j).log_probs(none);
  const int u = s / k;
  const int l = s % k;
  return (u == 0 ? rs_block(l, j) : awr_block(l, j)).log_probs(none);
}

EmissionTable::EmissionTable(const ObservationParams& obs) {
  states_ = obs.has_rs ? 2 * obs.k : obs.k;
  table_.resize(states_);
  for (int s = 0; s < states_; ++s) {
    table_[s].resize(obs.responses());
    for (int j = 0; j < obs.responses(); ++j) {
      const Vec lp = obs.log_pmf(s, j);
      table_[s][j].assign(lp.data(), lp.data() + lp.size());
    }
  }
}

void EmissionTable::log_emission(std::span<const int> y_row, Eigen::Ref<Vec> out) const {
  for (int s = 0; s < states_; ++s) {
    double acc = 0.0;
    for (std::size_t j = 0; j < y_row.size(); ++j) acc += table_[s][j][y_row[j]];
    out[s] = acc;
  }
}

Vec emission_matrix(const ObservationParams& obs, std::span<const int> y_row) {
  if (static_cast<int>(y_row.size()) != obs.responses())
    raise(ErrorCode::DimensionMismatch, "response row length mismatch");
  std::vector<int> zero_based(y_row.size());
  for (std::size_t j = 0; j < y_row.size(); ++j) {
    if (y_row[j] < 1 || y_row[j] > obs.categories[j])
      raise(ErrorCode::CategoryOutOfRange, "category outside 1..c_j");
    zero_based[j] = y_row[j] - 1;
  }
  EmissionTable table(obs);
  Vec out(table.states());
  table.log_emission(zero_based, out);
  return out.array().exp();
}

}  // namespace rshmm
