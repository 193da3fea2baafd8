// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "rshmm/logit_block.hpp"

namespace rshmm {

/// Ternary response-style score: 1 below the scale midpoint, 0 at c/2, -1
/// above. Defined for categories 1..c-1.
int score_function(int c, int y);

/// Category design of the two-parameter response-style family: row y holds
/// ((y-1), sum_{h<y} s(h)), so that eta_y = phi0 (y-1) + phi1 S(y).
Mat rs_design(int c);

/// Cumulative design of the saturated adjacent-categories family.
Mat awr_design(int c);

Vec rs_pmf(int c, double phi0, double phi1);
Vec awr_pmf(const VecRef& logits);
/// Inverse of awr_pmf: adjacent-category log ratios of a strictly positive pmf.
Vec awr_logits(const VecRef& pmf);

enum class ModeClass { ARS, DRS, MRS, ERS, CRS };
std::string to_string(ModeClass m);

struct ModeClassification {
  ModeClass label = ModeClass::CRS;
  bool tie = false;  // boundary case with several equiprobable modes
};

ModeClassification rs_mode_class(int c, double phi0, double phi1);

/// Conditional response distributions: for every construct state l and
/// response j, an RS-regime block (phi0, phi1) and an AWR-regime block of
/// c_j - 1 adjacent-category logits.
struct ObservationParams {
  int k = 1;
  bool has_rs = true;
  std::vector<int> categories;
  std::vector<LogitBlock> rs;   // index l * r + j
  std::vector<LogitBlock> awr;  // index l * r + j

  static ObservationParams make(int k, bool has_rs, std::vector<int> categories);

  int responses() const { return static_cast<int>(categories.size()); }
  const LogitBlock& rs_block(int l, int j) const { return rs[l * responses() + j]; }
  const LogitBlock& awr_block(int l, int j) const { return awr[l * responses() + j]; }
  LogitBlock& rs_block(int l, int j) { return rs[l * responses() + j]; }
  LogitBlock& awr_block(int l, int j) { return awr[l * responses() + j]; }

  /// Log pmf of response j in joint state s (s = u k + l without the RS
  /// component s = l).
  Vec log_pmf(int s, int j) const;
};

/// Precomputed log pmf tables, indexed [s][j][y-1].
class EmissionTable {
 public:
  EmissionTable() = default;
  explicit EmissionTable(const ObservationParams& obs);

  int states() const { return states_; }
  double log_pmf(int s, int j, int y0) const { return table_[s][j][y0]; }

  /// Log emission for a response row (0-based categories) and every state.
  void log_emission(std::span<const int> y_row, Eigen::Ref<Vec> out) const;

 private:
  int states_ = 0;
  std::vector<std::vector<std::vector<double>>> table_;
};

/// Emission vector over joint states for one occasion (1-based categories).
Vec emission_matrix(const ObservationParams& obs, std::span<const int> y_row);

}  // namespace rshmm
