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

#include "dagcausal/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dagcausal/errors.h"
#include "dagcausal/rng.h"

namespace dagcausal {

std::string_view kind_name(ColumnKind kind) {
  return kind == ColumnKind::kBinary ? "binary" : "continuous";
}

ColumnKind parse_kind(std::string_view name) {
  if (name == "binary") return ColumnKind::kBinary;
  if (name == "continuous") return ColumnKind::kContinuous;
  throw ConfigError("unknown column kind '" + std::string(name) + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void TabularDataset::add_column(Column column) {
  if (has_column(column.name)) {
    throw DataError("duplicate column '" + column.name + "'");
  }
  if (column.node && column_for_node(*column.node) != nullptr) {
    throw DataError("DAG node '" + *column.node +
                    "' is bound to more than one column");
  }
  if (!columns_.empty() && column.values.size() != rows_) {
    throw DataError("column '" + column.name + "' has " +
                    std::to_string(column.values.size()) + " rows, expected " +
                    std::to_string(rows_));
  }
  for (std::size_t r = 0; r < column.values.size(); ++r) {
    const double v = column.values[r];
    if (!std::isfinite(v)) {
      throw DataError("column '" + column.name + "' row " +
                      std::to_string(r + 1) + " is not finite");
    }
    if (column.kind == ColumnKind::kBinary && v != 0.0 && v != 1.0) {
      throw DataError("binary column '" + column.name + "' row " +
                      std::to_string(r + 1) + " holds " + format_double(v));
    }
  }
  rows_ = column.values.size();
  columns_.push_back(std::move(column));
}

const Column& TabularDataset::column(std::string_view name) const {
  for (const auto& c : columns_)
    if (c.name == name) return c;
  throw DataError("dataset has no column '" + std::string(name) + "'");
}

bool TabularDataset::has_column(std::string_view name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const Column& c) { return c.name == name; });
}

const Column* TabularDataset::column_for_node(std::string_view node) const {
  for (const auto& c : columns_)
    if (c.node && *c.node == node) return &c;
  return nullptr;
}

const Column& TabularDataset::require_node(std::string_view node) const {
  if (const Column* c = column_for_node(node)) return *c;
  throw DataError("no column is bound to DAG node '" + std::string(node) + "'");
}

void TabularDataset::set_treatment_column(std::string name) {
  column(name);
  treatment_ = std::move(name);
}

void TabularDataset::set_outcome_column(std::string name) {
  column(name);
  outcome_ = std::move(name);
}

void TabularDataset::set_ground_truth(GroundTruth truth) {
  for (const auto* v : {&truth.cate, &truth.propensity, &truth.mu0, &truth.mu1}) {
    if (!v->empty() && v->size() != rows_) {
      throw DataError("ground-truth vector length does not match dataset rows");
    }
  }
  truth_ = std::move(truth);
}

TabularDataset TabularDataset::select_rows(std::span<const std::size_t> rows) const {
  auto pick = [&](const std::vector<double>& v) {
    std::vector<double> out;
    if (v.empty()) return out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v.at(r));
    return out;
  };
  TabularDataset out;
  for (const auto& c : columns_) {
    Column copy{c.name, c.kind, pick(c.values), c.node};
    out.add_column(std::move(copy));
  }
  out.treatment_ = treatment_;
  out.outcome_ = outcome_;
  if (truth_) {
    GroundTruth t = *truth_;
    t.cate = pick(truth_->cate);
    t.propensity = pick(truth_->propensity);
    t.mu0 = pick(truth_->mu0);
    t.mu1 = pick(truth_->mu1);
    out.truth_ = std::move(t);
  }
  return out;
}

TabularDataset TabularDataset::with_values(std::string_view name,
                                           std::vector<double> values) const {
  TabularDataset out;
  for (const auto& c : columns_) {
    if (c.name == name) {
      out.add_column({c.name, c.kind, values, c.node});
    } else {
      out.add_column(c);
    }
  }
  out.treatment_ = treatment_;
  out.outcome_ = outcome_;
  out.truth_ = truth_;
  return out;
}

nlohmann::json TabularDataset::schema_json() const {
  Schema s;
  for (const auto& c : columns_) s.columns.push_back({c.name, c.kind, c.node});
  s.treatment = treatment_;
  s.outcome = outcome_;
  return s.to_json();
}

std::string TabularDataset::to_csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out << ',';
    out << columns_[i].name;
  }
  out << '\n';
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out << ',';
      const double v = columns_[i].values[r];
      if (columns_[i].kind == ColumnKind::kBinary) {
        out << (v == 1.0 ? '1' : '0');
      } else {
        out << format_double(v);
      }
    }
    out << '\n';
  }
  return out.str();
}

Schema Schema::from_json(const nlohmann::json& j) {
  try {
    Schema s;
    for (const auto& c : j.at("columns")) {
      ColumnSpec spec;
      spec.name = c.at("name").get<std::string>();
      spec.kind = parse_kind(c.value("kind", std::string("continuous")));
      if (c.contains("node") && !c.at("node").is_null())
        spec.node = c.at("node").get<std::string>();
      s.columns.push_back(std::move(spec));
    }
    if (j.contains("treatment") && !j.at("treatment").is_null())
      s.treatment = j.at("treatment").get<std::string>();
    if (j.contains("outcome") && !j.at("outcome").is_null())
      s.outcome = j.at("outcome").get<std::string>();
    if (j.contains("ground_truth")) {
      const auto& gt = j.at("ground_truth");
      s.truth_y0 = gt.at("y0").get<std::string>();
      s.truth_y1 = gt.at("y1").get<std::string>();
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schema JSON: ") + e.what());
  }
}

nlohmann::json Schema::to_json() const {
  nlohmann::json j;
  j["columns"] = nlohmann::json::array();
  for (const auto& c : columns) {
    nlohmann::json col{{"name", c.name}, {"kind", kind_name(c.kind)}};
    col["node"] = c.node ? nlohmann::json(*c.node) : nlohmann::json(nullptr);
    j["columns"].push_back(std::move(col));
  }
  j["treatment"] = treatment ? nlohmann::json(*treatment) : nlohmann::json(nullptr);
  j["outcome"] = outcome ? nlohmann::json(*outcome) : nlohmann::json(nullptr);
  if (truth_y0 && truth_y1) {
    j["ground_truth"] = {{"y0", *truth_y0}, {"y1", *truth_y1}};
  }
  return j;
}

Schema lalonde_schema() {
  Schema s;
  s.columns = {
      {"age", ColumnKind::kContinuous, "age"},
      {"education", ColumnKind::kContinuous, "education"},
      {"black", ColumnKind::kBinary, "black"},
      {"hispanic", ColumnKind::kBinary, "hispanic"},
      {"married", ColumnKind::kBinary, "married"},
      {"re74", ColumnKind::kContinuous, "re74"},
      {"re75", ColumnKind::kContinuous, "re75"},
      {"treat", ColumnKind::kBinary, "A"},
      {"re78", ColumnKind::kContinuous, "Y"},
  };
  s.treatment = "treat";
  s.outcome = "re78";
  return s;
}

Schema acic_schema(std::size_t covariates) {
  Schema s;
  for (std::size_t k = 1; k <= covariates; ++k) {
    const std::string name = "x_" + std::to_string(k);
    s.columns.push_back({name, ColumnKind::kContinuous, name});
  }
  s.columns.push_back({"z", ColumnKind::kBinary, "A"});
  s.columns.push_back({"y", ColumnKind::kContinuous, "Y"});
  s.columns.push_back({"mu0", ColumnKind::kContinuous, std::nullopt});
  s.columns.push_back({"mu1", ColumnKind::kContinuous, std::nullopt});
  s.treatment = "z";
  s.outcome = "y";
  s.truth_y0 = "mu0";
  s.truth_y1 = "mu1";
  return s;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ContractError("bootstrap of an empty dataset");
  Rng rng(seed, /*stream=*/0xB007);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
  return idx;
}

TabularDataset bootstrap(const TabularDataset& data, std::uint64_t seed) {
  const auto idx = bootstrap_indices(data.rows(), seed);
  return data.select_rows(idx);
}

std::pair<TabularDataset, TabularDataset> split_train_validation(
    const TabularDataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ContractError("train fraction must lie in (0, 1)");
  }
  const std::size_t n = data.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, /*stream=*/0x5911);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) {
    throw ContractError("split leaves an empty partition");
  }
  std::vector<std::size_t> a(perm.begin(), perm.begin() + n_train);
  std::vector<std::size_t> b(perm.begin() + n_train, perm.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {data.select_rows(a), data.select_rows(b)};
}

}  // namespace dagcausal
