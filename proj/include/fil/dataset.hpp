//
// Copyright 2026 The filaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FILAUDIT_DATASET_HPP
#define FILAUDIT_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <json.hpp>

#include "fil/random.hpp"

namespace fil {

enum class ColumnKind { kNumeric, kNominal };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Nominal only. Encoded width is categories.size() - 1: the last category
  // maps to the all-zeros pattern.
  std::vector<std::string> categories;
};

// Typed description of a CSV table: column kinds, the target column, and the
// optional nominal column that inversion attacks will aim at.
struct FeatureSpec {
  std::vector<ColumnSpec> columns;
  std::string target_column;
  std::string attack_attribute;  // optional

  const ColumnSpec* find(const std::string& name) const {
    for (const auto& c : columns) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  void validate() const {
    if (columns.empty()) throw std::invalid_argument("FeatureSpec: no columns");
    if (target_column.empty()) {
      throw std::invalid_argument("FeatureSpec: target column not set");
    }
    const ColumnSpec* target = find(target_column);
    if (target == nullptr) {
      throw std::invalid_argument("FeatureSpec: target column '" +
                                  target_column + "' not among columns");
    }
    for (const auto& c : columns) {
      if (c.kind == ColumnKind::kNominal && c.categories.size() < 2) {
        throw std::invalid_argument("FeatureSpec: nominal column '" + c.name +
                                    "' needs at least 2 categories");
      }
    }
    if (!attack_attribute.empty()) {
      const ColumnSpec* a = find(attack_attribute);
      if (a == nullptr || a->kind != ColumnKind::kNominal) {
        throw std::invalid_argument(
            "FeatureSpec: attack attribute '" + attack_attribute +
            "' must be a nominal column");
      }
    }
  }

  static FeatureSpec from_json(const nlohmann::json& j) {
    FeatureSpec spec;
    spec.target_column = j.at("target").get<std::string>();
    if (j.contains("attack_attribute")) {
      spec.attack_attribute = j.at("attack_attribute").get<std::string>();
    }
    for (const auto& jc : j.at("columns")) {
      ColumnSpec c;
      c.name = jc.at("name").get<std::string>();
      const std::string kind = jc.at("kind").get<std::string>();
      if (kind == "numeric") {
        c.kind = ColumnKind::kNumeric;
      } else if (kind == "nominal") {
        c.kind = ColumnKind::kNominal;
        c.categories = jc.at("categories").get<std::vector<std::string>>();
      } else {
        throw std::invalid_argument("FeatureSpec: unknown column kind '" +
                                    kind + "'");
      }
      spec.columns.push_back(std::move(c));
    }
    spec.validate();
    return spec;
  }

  static FeatureSpec load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature spec: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns) {
      nlohmann::json jc{{"name", c.name}};
      if (c.kind == ColumnKind::kNumeric) {
        jc["kind"] = "numeric";
      } else {
        jc["kind"] = "nominal";
        jc["categories"] = c.categories;
      }
      cols.push_back(std::move(jc));
    }
    nlohmann::json j{{"target", target_column}, {"columns", std::move(cols)}};
    if (!attack_attribute.empty()) j["attack_attribute"] = attack_attribute;
    return j;
  }
};

// String table in spec column order; rows with missing fields already dropped.
struct RawTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows;
  std::size_t dropped_rows = 0;
};

// Contiguous block of encoded columns produced by one original column.
struct AttributeGroup {
  std::size_t offset = 0;
  std::size_t width = 0;
  // Value a set one-hot cell carries in X. 1.0 after encode; rescaled by
  // normalize_unit_ball so candidate rewrites stay consistent with X.
  double indicator_value = 1.0;
  std::vector<std::string> categories;  // empty for numeric columns
};

struct NumericScaler {
  double mean = 0.0;
  double stddev = 1.0;  // population standard deviation
};

struct PcaBasis {
  Eigen::RowVectorXd mean;          // column means of the fitted matrix
  Eigen::MatrixXd components;       // d x k, ordered by decreasing singular value
  Eigen::VectorXd singular_values;  // all singular values of the centered matrix

  Eigen::VectorXd explained_variance_ratio() const {
    const double total = singular_values.squaredNorm();
    Eigen::VectorXd ratio(components.cols());
    for (Eigen::Index i = 0; i < components.cols(); ++i) {
      ratio[i] = singular_values[i] * singular_values[i] / total;
    }
    return ratio;
  }
};

// Encoded design matrix plus targets. Immutable after construction; safe to
// share read-only across threads.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  std::map<std::string, AttributeGroup> groups;   // original column -> span
  std::map<std::string, NumericScaler> scalers;   // original numeric columns
  double unit_ball_scale = 1.0;  // cumulative factor applied to X
  std::optional<PcaBasis> pca;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }

  const AttributeGroup& group(const std::string& name) const {
    auto it = groups.find(name);
    if (it == groups.end()) {
      throw std::invalid_argument("dataset has no attribute group '" + name +
                                  "'");
    }
    return it->second;
  }
};

// ---------------------------------------------------------------------------
// Flat layout of the data vector z = [x_1, y_1, ..., x_n, y_n].
// Element j of example i sits at i*(d+1)+j; the target of example i at
// i*(d+1)+d. All subset selection in the engine depends on this layout.
// ---------------------------------------------------------------------------

inline std::size_t flat_index(std::size_t example, std::size_t coordinate,
                              std::size_t d) {
  return example * (d + 1) + coordinate;
}

struct FlatCoord {
  std::size_t example = 0;
  std::size_t coordinate = 0;  // in [0, d]; == d means the target

  bool is_target(std::size_t d) const { return coordinate == d; }
};

inline FlatCoord unflatten(std::size_t flat, std::size_t d) {
  return FlatCoord{flat / (d + 1), flat % (d + 1)};
}

inline std::vector<std::size_t> example_flat_indices(std::size_t example,
                                                     std::size_t d) {
  std::vector<std::size_t> out(d + 1);
  std::iota(out.begin(), out.end(), example * (d + 1));
  return out;
}

inline std::vector<std::size_t> attribute_flat_indices(std::size_t coordinate,
                                                       std::size_t n,
                                                       std::size_t d) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = flat_index(i, coordinate, d);
  return out;
}

inline double flat_value(const Dataset& ds, std::size_t flat) {
  const FlatCoord c = unflatten(flat, ds.dim());
  return c.is_target(ds.dim()) ? ds.y[static_cast<Eigen::Index>(c.example)]
                               : ds.X(static_cast<Eigen::Index>(c.example),
                                      static_cast<Eigen::Index>(c.coordinate));
}

inline void set_flat_value(Dataset& ds, std::size_t flat, double value) {
  const FlatCoord c = unflatten(flat, ds.dim());
  if (c.is_target(ds.dim())) {
    ds.y[static_cast<Eigen::Index>(c.example)] = value;
  } else {
    ds.X(static_cast<Eigen::Index>(c.example),
         static_cast<Eigen::Index>(c.coordinate)) = value;
  }
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits one CSV record. Handles double-quoted fields with doubled quotes;
// no embedded newlines.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

inline bool is_missing(const std::string& token) {
  return token.empty() || token == "?";
}

inline double parse_numeric(const std::string& token, const std::string& column,
                            std::size_t line_number) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != token.size()) {
    throw std::runtime_error("non-numeric token '" + token +
                             "' in numeric column '" + column + "' (line " +
                             std::to_string(line_number) + ")");
  }
  return value;
}

}  // namespace detail

// Loads a CSV file with a header row. Rows with any missing field (empty or
// "?") are dropped and counted; tokens are validated against the spec.
inline RawTable load_csv(const std::string& path, const FeatureSpec& spec) {
  spec.validate();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("CSV file has no header row: " + path);
  }
  const std::vector<std::string> header = detail::split_csv_line(line);

  std::vector<std::size_t> source_index(spec.columns.size());
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    auto it = std::find(header.begin(), header.end(), spec.columns[c].name);
    if (it == header.end()) {
      throw std::runtime_error("CSV header is missing column '" +
                               spec.columns[c].name + "'");
    }
    source_index[c] = static_cast<std::size_t>(it - header.begin());
  }

  RawTable table;
  for (const auto& c : spec.columns) table.column_names.push_back(c.name);

  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);

    std::vector<std::string> row(spec.columns.size());
    bool missing = false;
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
      if (source_index[c] >= fields.size() ||
          detail::is_missing(fields[source_index[c]])) {
        missing = true;
        break;
      }
      row[c] = fields[source_index[c]];
    }
    if (missing) {
      ++table.dropped_rows;
      continue;
    }

    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
      const ColumnSpec& col = spec.columns[c];
      if (col.kind == ColumnKind::kNumeric) {
        detail::parse_numeric(row[c], col.name, line_number);
      } else {
        if (std::find(col.categories.begin(), col.categories.end(), row[c]) ==
            col.categories.end()) {
          throw std::runtime_error("unknown category '" + row[c] +
                                   "' in column '" + col.name + "' (line " +
                                   std::to_string(line_number) + ")");
        }
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t column_position(const RawTable& raw,
                                   const std::string& name) {
  auto it = std::find(raw.column_names.begin(), raw.column_names.end(), name);
  if (it == raw.column_names.end()) {
    throw std::invalid_argument("raw table has no column '" + name + "'");
  }
  return static_cast<std::size_t>(it - raw.column_names.begin());
}

inline std::size_t category_index(const ColumnSpec& col,
                                  const std::string& token) {
  auto it = std::find(col.categories.begin(), col.categories.end(), token);
  if (it == col.categories.end()) {
    throw std::runtime_error("unknown category '" + token + "' in column '" +
                             col.name + "'");
  }
  return static_cast<std::size_t>(it - col.categories.begin());
}

}  // namespace detail

// One-hot encodes nominal columns (last category dropped: all-zeros pattern)
// and centers/scales numeric columns with statistics computed on this table.
// The target column becomes y: numeric values directly, or -1/+1 for a
// two-category nominal target (second category maps to +1).
inline Dataset encode(const RawTable& raw, const FeatureSpec& spec) {
  spec.validate();
  const std::size_t n = raw.rows.size();

  const ColumnSpec* target_col = spec.find(spec.target_column);
  if (target_col->kind == ColumnKind::kNominal &&
      target_col->categories.size() != 2) {
    throw std::invalid_argument(
        "nominal target column must have exactly 2 categories");
  }

  Dataset ds;
  std::size_t width = 0;
  for (const auto& col : spec.columns) {
    if (col.name == spec.target_column) continue;
    const std::size_t w =
        col.kind == ColumnKind::kNumeric ? 1 : col.categories.size() - 1;
    AttributeGroup group;
    group.offset = width;
    group.width = w;
    group.categories =
        col.kind == ColumnKind::kNominal ? col.categories
                                         : std::vector<std::string>{};
    ds.groups[col.name] = std::move(group);
    if (col.kind == ColumnKind::kNumeric) {
      ds.feature_names.push_back(col.name);
    } else {
      for (std::size_t k = 0; k + 1 < col.categories.size(); ++k) {
        ds.feature_names.push_back(col.name + "=" + col.categories[k]);
      }
    }
    width += w;
  }

  ds.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(width));
  ds.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

  const std::size_t target_pos =
      detail::column_position(raw, spec.target_column);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& token = raw.rows[i][target_pos];
    if (target_col->kind == ColumnKind::kNumeric) {
      ds.y[static_cast<Eigen::Index>(i)] =
          detail::parse_numeric(token, target_col->name, i + 2);
    } else {
      ds.y[static_cast<Eigen::Index>(i)] =
          detail::category_index(*target_col, token) == 0 ? -1.0 : 1.0;
    }
  }

  for (const auto& col : spec.columns) {
    if (col.name == spec.target_column) continue;
    const std::size_t pos = detail::column_position(raw, col.name);
    AttributeGroup& group = ds.groups[col.name];

    if (col.kind == ColumnKind::kNumeric) {
      Eigen::VectorXd values(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        values[static_cast<Eigen::Index>(i)] =
            detail::parse_numeric(raw.rows[i][pos], col.name, i + 2);
      }
      double mean = 0.0, stddev = 1.0;
      if (n > 0) {
        mean = values.mean();
        stddev = std::sqrt((values.array() - mean).square().mean());
        if (stddev == 0.0) {
          throw std::runtime_error("constant numeric column '" + col.name +
                                   "' cannot be scaled to unit variance");
        }
      }
      ds.scalers[col.name] = NumericScaler{mean, stddev};
      ds.X.col(static_cast<Eigen::Index>(group.offset)) =
          (values.array() - mean) / stddev;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = detail::category_index(col, raw.rows[i][pos]);
        if (k + 1 < col.categories.size()) {
          ds.X(static_cast<Eigen::Index>(i),
               static_cast<Eigen::Index>(group.offset + k)) = 1.0;
        }
      }
    }
  }
  return ds;
}

// Encodes a table with the scalers of an already-encoded reference dataset,
// so held-out rows see the same centering/scaling as the training rows.
inline Dataset encode_like(const RawTable& raw, const FeatureSpec& spec,
                           const Dataset& reference) {
  Dataset ds = encode(raw, spec);
  for (auto& [name, scaler] : ds.scalers) {
    auto it = reference.scalers.find(name);
    if (it == reference.scalers.end()) {
      throw std::invalid_argument("reference dataset has no scaler for '" +
                                  name + "'");
    }
    const auto& group = ds.groups.at(name);
    const Eigen::Index col = static_cast<Eigen::Index>(group.offset);
    // Undo this table's scaling, apply the reference scaling.
    ds.X.col(col) = ds.X.col(col) * scaler.stddev;
    ds.X.col(col) = (ds.X.col(col).array() + scaler.mean - it->second.mean) /
                    it->second.stddev;
    scaler = it->second;
  }
  if (reference.unit_ball_scale != 1.0) {
    ds.X *= reference.unit_ball_scale;
    ds.unit_ball_scale *= reference.unit_ball_scale;
    for (auto& [name, group] : ds.groups) {
      group.indicator_value *= reference.unit_ball_scale;
    }
  }
  return ds;
}

// Scales X so every row lies in the unit ball. The same factor applies to all
// rows, preserving relative geometry; it is recorded in unit_ball_scale and in
// each group's indicator value. A max norm within 1e-12 of 1 counts as already
// normalized, which makes the operation exactly idempotent.
inline Dataset normalize_unit_ball(const Dataset& input,
                                   std::string* warning = nullptr) {
  Dataset ds = input;
  if (ds.size() == 0) return ds;
  const double max_norm = ds.X.rowwise().norm().maxCoeff();
  if (max_norm == 0.0) {
    if (warning != nullptr) {
      *warning = "normalize_unit_ball: all-zero design matrix, nothing to do";
    }
    return ds;
  }
  if (std::abs(max_norm - 1.0) <= 1e-12) return ds;
  const double scale = 1.0 / max_norm;
  ds.X *= scale;
  ds.unit_ball_scale *= scale;
  for (auto& [name, group] : ds.groups) group.indicator_value *= scale;
  return ds;
}

// Projects the centered design matrix onto its top-k principal directions.
// The basis is stored on the result for reuse on held-out data. Attribute
// groups and scalers no longer describe the projected columns and are
// dropped; so is the unit-ball bookkeeping.
inline Dataset pca_project(const Dataset& input, std::size_t k) {
  const std::size_t d = input.dim();
  const std::size_t n = input.size();
  if (k < 1 || k > d) {
    throw std::invalid_argument("pca_project: k must be in [1, " +
                                std::to_string(d) + "]");
  }
  if (n < k) {
    throw std::invalid_argument("pca_project: needs at least k rows");
  }

  const Eigen::RowVectorXd mean = input.X.colwise().mean();
  const Eigen::MatrixXd centered = input.X.rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();

  const double rank_tol = static_cast<double>(std::max(n, d)) *
                          std::numeric_limits<double>::epsilon() *
                          (sv.size() > 0 ? sv[0] : 0.0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > rank_tol) ++rank;
  }
  if (k > rank) {
    throw std::invalid_argument(
        "pca_project: k=" + std::to_string(k) +
        " exceeds the achievable rank " + std::to_string(rank));
  }

  PcaBasis basis;
  basis.mean = mean;
  basis.components = svd.matrixV().leftCols(static_cast<Eigen::Index>(k));
  basis.singular_values = sv;

  Dataset ds;
  ds.X = centered * basis.components;
  ds.y = input.y;
  for (std::size_t i = 0; i < k; ++i) {
    ds.feature_names.push_back("pc" + std::to_string(i));
  }
  ds.pca = std::move(basis);
  return ds;
}

// Applies a previously fitted PCA basis to another dataset (held-out data).
inline Dataset pca_apply(const Dataset& input, const PcaBasis& basis) {
  if (input.X.cols() != basis.components.rows()) {
    throw std::invalid_argument("pca_apply: dimension mismatch");
  }
  Dataset ds;
  ds.X = (input.X.rowwise() - basis.mean) * basis.components;
  ds.y = input.y;
  for (Eigen::Index i = 0; i < basis.components.cols(); ++i) {
    ds.feature_names.push_back("pc" + std::to_string(i));
  }
  ds.pca = basis;
  return ds;
}

namespace detail {

inline Dataset take_rows(const Dataset& input,
                         const std::vector<std::size_t>& rows) {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), input.X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) =
        input.X.row(static_cast<Eigen::Index>(rows[i]));
    out.y[static_cast<Eigen::Index>(i)] =
        input.y[static_cast<Eigen::Index>(rows[i])];
  }
  out.feature_names = input.feature_names;
  out.groups = input.groups;
  out.scalers = input.scalers;
  out.unit_ball_scale = input.unit_ball_scale;
  out.pca = input.pca;
  return out;
}

}  // namespace detail

// Deterministic random split; |test| = round(n * test_fraction) and every row
// lands in exactly one side. Row order within each side follows the original.
inline std::pair<Dataset, Dataset> split(const Dataset& input,
                                         double test_fraction,
                                         std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split: test_fraction must be in (0, 1)");
  }
  const std::size_t n = input.size();
  const std::size_t test_count = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * test_fraction));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::size_t> test_rows(order.begin(),
                                     order.begin() +
                                         static_cast<std::ptrdiff_t>(test_count));
  std::vector<std::size_t> train_rows(order.begin() +
                                          static_cast<std::ptrdiff_t>(test_count),
                                      order.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {detail::take_rows(input, train_rows),
          detail::take_rows(input, test_rows)};
}

// Writes an encoded dataset as a CSV snapshot (features + target), full
// precision, for reproducibility.
inline void save_snapshot(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write snapshot: " + path);
  out.precision(17);
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    out << (ds.feature_names.size() == ds.dim() ? ds.feature_names[j]
                                                : "f" + std::to_string(j))
        << ',';
  }
  out << "target\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      out << ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
          << ',';
    }
    out << ds.y[static_cast<Eigen::Index>(i)] << '\n';
  }
}

// Reads a snapshot back as an all-numeric dataset (no scaling applied).
inline Dataset load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("snapshot has no header: " + path);
  }
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.empty() || header.back() != "target") {
    throw std::runtime_error("snapshot header must end with 'target'");
  }
  const std::size_t d = header.size() - 1;

  std::vector<std::vector<double>> rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("snapshot row " + std::to_string(line_number) +
                               " has wrong field count");
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      row[c] = detail::parse_numeric(fields[c], header[c], line_number);
    }
    rows.push_back(std::move(row));
  }

  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(d));
  ds.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
    ds.y[static_cast<Eigen::Index>(i)] = rows[i][d];
  }
  ds.feature_names.assign(header.begin(), header.end() - 1);
  for (std::size_t j = 0; j < d; ++j) {
    AttributeGroup g;
    g.offset = j;
    g.width = 1;
    ds.groups[ds.feature_names[j]] = g;
  }
  return ds;
}

}  // namespace fil

#endif  // FILAUDIT_DATASET_HPP
