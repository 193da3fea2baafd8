// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rshmm/logit_block.hpp"
#include "rshmm/model_spec.hpp"

namespace rshmm {

/// One covariate column of the schema; with `level` set the column is
/// one-hot coded (1 when the cell equals the level, 0 otherwise).
struct CovariateColumn {
  std::string column;
  std::optional<std::string> level;

  std::string name() const { return level ? column + "=" + *level : column; }
};

struct ResponseColumn {
  std::string column;
  int categories = 2;
};

struct PanelSchema {
  std::string unit = "unit_id";
  std::string time = "time";
  std::vector<ResponseColumn> responses;
  std::vector<CovariateColumn> x_L, x_U, z_L, z_U;

  static PanelSchema from_json_text(const std::string& text);
  static PanelSchema load(const std::string& path);
  std::string to_json_text() const;
};

/// Balanced ordinal panel. Categories are stored 0-based.
/// Transition covariates are stored for every occasion; row t = 0 is carried
/// along but never used by the model.
struct PanelDataset {
  int n = 0;
  int T = 0;
  std::vector<int> categories;      // c_j
  std::vector<std::string> response_names;
  std::vector<std::string> unit_ids;
  std::vector<double> times;
  std::vector<int> y;               // [(i * T + t) * r + j], 0-based
  Mat x_L, x_U;                     // n x p1
  Mat z_L, z_U;                     // (n * T) x p2, row i * T + t
  std::vector<std::string> x_L_names, x_U_names, z_L_names, z_U_names;

  int r() const { return static_cast<int>(categories.size()); }
  ModelDims dims() const;
  std::span<const int> y_row(int i, int t) const {
    return {y.data() + (static_cast<std::size_t>(i) * T + t) * r(), static_cast<std::size_t>(r())};
  }
  int y_at(int i, int t, int j) const { return y[(static_cast<std::size_t>(i) * T + t) * r() + j]; }
  int& y_at(int i, int t, int j) { return y[(static_cast<std::size_t>(i) * T + t) * r() + j]; }

  /// Checks shapes and category ranges; min_T is 2 for loaded data.
  void validate(int min_T = 2) const;

  /// Empty dataset of the given shape with zero responses and covariates.
  static PanelDataset shaped(int n, int T, std::vector<int> categories, int p1_L, int p1_U,
                             int p2_L, int p2_U);
};

PanelDataset load_panel(const std::string& csv_path, const PanelSchema& schema);
PanelDataset parse_panel(const std::string& csv_text, const PanelSchema& schema);

/// Long-format CSV (1-based categories) and a schema describing it.
std::string panel_to_csv(const PanelDataset& data);
PanelSchema panel_schema(const PanelDataset& data);
void write_panel(const PanelDataset& data, const std::string& csv_path,
                 const std::string& schema_path);

/// Distinct rows of a matrix in lexicographic order with the group of every
/// input row.
struct RowGroups {
  Mat rows;
  std::vector<int> group_of;
  std::vector<std::vector<int>> members;

  int size() const { return static_cast<int>(rows.rows()); }
};

RowGroups group_rows(const Mat& m);

/// Per-occasion covariate configurations used to group residuals: at the
/// first occasion the key is (x_U, x_L), later (x_U, z_U,t, x_L, z_L,t).
struct CovariateConfigIndex {
  std::vector<RowGroups> by_time;
};

CovariateConfigIndex index_configurations(const PanelDataset& data);

/// Configuration groups used by estimation. Transition groups cover the
/// (unit, occasion) pairs with t >= 1, row i * (T - 1) + t - 1.
struct EstimationIndex {
  RowGroups init_L, init_U, init_joint;
  RowGroups trans_L, trans_U, trans_joint;
};

EstimationIndex index_for_estimation(const PanelDataset& data);

}  // namespace rshmm
