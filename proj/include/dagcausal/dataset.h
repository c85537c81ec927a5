/*
 * Copyright 2026 The dagcausal Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DAGCAUSAL_DATASET_H_
#define DAGCAUSAL_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace dagcausal {

enum class ColumnKind { kContinuous, kBinary };

std::string_view kind_name(ColumnKind kind);
ColumnKind parse_kind(std::string_view name);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  std::vector<double> values;
  // DAG node this column realizes, if any.
  std::optional<std::string> node;
};

// Simulator-side truth carried with a dataset. Per-unit vectors are either
// empty or have one entry per row.
struct GroundTruth {
  std::string source;  // simulator name, or "schema" for loaded truth columns
  std::string version;
  std::optional<double> true_ate;
  std::vector<double> cate;
  std::vector<double> propensity;
  std::vector<double> mu0;
  std::vector<double> mu1;
};

class TabularDataset {
 public:
  TabularDataset() = default;

  // Validates length against existing columns, binary column contents and
  // uniqueness of the name and of the bound node.
  void add_column(Column column);

  std::size_t rows() const { return rows_; }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  // Column bound to DAG node `node`; nullptr if none.
  const Column* column_for_node(std::string_view node) const;
  const Column& require_node(std::string_view node) const;

  const std::optional<std::string>& treatment_column() const { return treatment_; }
  const std::optional<std::string>& outcome_column() const { return outcome_; }
  void set_treatment_column(std::string name);
  void set_outcome_column(std::string name);

  const std::optional<GroundTruth>& ground_truth() const { return truth_; }
  void set_ground_truth(GroundTruth truth);

  // Rows in the given order (duplicates allowed); per-unit truth follows.
  TabularDataset select_rows(std::span<const std::size_t> rows) const;
  // Copy with the named column's values replaced.
  TabularDataset with_values(std::string_view name, std::vector<double> values) const;

  nlohmann::json schema_json() const;
  std::string to_csv() const;

 private:
  std::size_t rows_ = 0;
  std::vector<Column> columns_;
  std::optional<std::string> treatment_;
  std::optional<std::string> outcome_;
  std::optional<GroundTruth> truth_;
};

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  std::optional<std::string> node;
};

// Column typing and role bindings for CSV ingestion.
struct Schema {
  std::vector<ColumnSpec> columns;
  std::optional<std::string> treatment;
  std::optional<std::string> outcome;
  // Optional potential-outcome columns (e.g. ACIC ground truth).
  std::optional<std::string> truth_y0;
  std::optional<std::string> truth_y1;

  static Schema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Lalonde NSW schema: covariates age, education, black, hispanic (race),
// married, re74, re75 (earnings); treatment `treat`; outcome `re78`.
Schema lalonde_schema();
inline constexpr double kLalondeTrueAte = 1794.34;
inline constexpr std::size_t kLalondeTreated = 185;
inline constexpr std::size_t kLalondeCpsControls = 15992;
inline constexpr std::size_t kLalondePsidControls = 2490;

// ACIC 2016 layout: x_1..x_58 continuous covariates, z treatment, y outcome
// and mu0/mu1 potential outcomes.
Schema acic_schema(std::size_t covariates = 58);

// RFC-4180 parsing with a required header row. Columns absent from the schema
// are ignored; malformed cells raise DataError naming the 1-based data row.
TabularDataset parse_csv(std::string_view text, const Schema& schema);
TabularDataset load_csv(const std::string& path, const Schema& schema);

// n rows drawn with replacement using `seed`.
TabularDataset bootstrap(const TabularDataset& data, std::uint64_t seed);
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed);

// Random partition; the first element holds round(train_fraction * n) rows.
std::pair<TabularDataset, TabularDataset> split_train_validation(
    const TabularDataset& data, double train_fraction, std::uint64_t seed);

std::string format_double(double v);

}  // namespace dagcausal

#endif  // DAGCAUSAL_DATASET_H_
