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

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "dagcausal/dataset.h"
#include "dagcausal/errors.h"

namespace dagcausal {

namespace {

// Splits RFC-4180 text into records of fields. Quoted fields may contain
// commas, newlines and doubled quotes.
std::vector<std::vector<std::string>> tokenize(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw DataError("CSV ends inside a quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

TabularDataset parse_csv(std::string_view text, const Schema& schema) {
  const auto records = tokenize(text);
  if (records.empty()) throw DataError("CSV file is empty");
  const auto& header = records.front();
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position[trim(header[i])] = i;
  if (records.size() == 1) throw DataError("CSV has a header but no data rows");

  TabularDataset data;
  for (const auto& spec : schema.columns) {
    auto it = position.find(spec.name);
    if (it == position.end()) {
      throw DataError("CSV is missing schema column '" + spec.name + "'");
    }
    Column col{spec.name, spec.kind, {}, spec.node};
    col.values.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& rec = records[r];
      if (rec.size() != header.size()) {
        throw DataError("CSV row " + std::to_string(r) + " has " +
                        std::to_string(rec.size()) + " fields, header has " +
                        std::to_string(header.size()));
      }
      const std::string cell = trim(rec[it->second]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() ||
          res.ptr != cell.data() + cell.size()) {
        throw DataError("CSV row " + std::to_string(r) + ", column '" +
                        spec.name + "': cannot parse '" + cell + "' as a number");
      }
      if (spec.kind == ColumnKind::kBinary && v != 0.0 && v != 1.0) {
        throw DataError("CSV row " + std::to_string(r) + ", binary column '" +
                        spec.name + "' holds " + cell);
      }
      col.values.push_back(v);
    }
    data.add_column(std::move(col));
  }
  if (schema.treatment) data.set_treatment_column(*schema.treatment);
  if (schema.outcome) data.set_outcome_column(*schema.outcome);
  if (schema.truth_y0 && schema.truth_y1) {
    const auto& y0 = data.column(*schema.truth_y0).values;
    const auto& y1 = data.column(*schema.truth_y1).values;
    GroundTruth truth;
    truth.source = "schema";
    truth.mu0 = y0;
    truth.mu1 = y1;
    double s = 0.0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
      truth.cate.push_back(y1[i] - y0[i]);
      s += y1[i] - y0[i];
    }
    truth.true_ate = s / static_cast<double>(y0.size());
    data.set_ground_truth(std::move(truth));
  }
  return data;
}

TabularDataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

}  // namespace dagcausal
