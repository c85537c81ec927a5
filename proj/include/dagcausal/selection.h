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

#ifndef DAGCAUSAL_SELECTION_H_
#define DAGCAUSAL_SELECTION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dagcausal/forest.h"
#include "dagcausal/pipeline.h"
#include "json.hpp"

namespace dagcausal {

// Tunable parameters in canonical order.
inline constexpr const char* kGridParameters[] = {
    "epochs",        "batch_size",         "learning_rate", "l2_penalty",
    "mlp_width",     "mlp_depth",          "num_encoder_layers", "dropout_rate",
    "embedding_dim", "feedforward_dim",    "num_heads",     "alpha",
};

class HyperGrid {
 public:
  // `j` maps parameter names to value lists. Parameters it omits become
  // singletons holding the value in `base`. Unknown names and empty lists
  // are ConfigErrors.
  static HyperGrid from_json(const nlohmann::json& j, const FitSpec& base);

  // Number of points of the Cartesian product.
  std::size_t size() const;
  // Point i as {parameter: value}; the last parameter varies fastest.
  nlohmann::json point(std::size_t i) const;
  const std::vector<std::pair<std::string, std::vector<nlohmann::json>>>& axes() const {
    return axes_;
  }
  nlohmann::json to_json() const;

 private:
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes_;
};

// `base` with the model and optimizer fields of a grid point applied to every
// model it trains.
FitSpec apply_point(const FitSpec& base, const nlohmann::json& point);

// FNV-1a of the point's compact JSON, as 16 hex digits.
std::string config_hash(const nlohmann::json& point);

enum class SelectionMode { kCate, kAte };

std::string_view selection_mode_name(SelectionMode m);
SelectionMode parse_selection_mode(std::string_view name);

struct SelectionOptions {
  SelectionMode mode = SelectionMode::kCate;
  ForestConfig forest;
  // ATE mode: bootstrap replicates of the validation split.
  std::size_t ate_replicates = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct CandidateRow {
  std::size_t grid_index = 0;
  std::string hash;
  nlohmann::json point;
  double nrmse = 0.0;  // NaN when diverged
  double train_loss = 0.0;
  bool diverged = false;
  std::size_t parameters = 0;
  std::string note;
};

struct SelectionResult {
  // Ascending NRMSE, ties by fewer parameters then grid order; diverged last.
  std::vector<CandidateRow> ranking;
  std::optional<FittedEstimator> best;
  // Plug-in reference the candidates were scored against.
  std::vector<double> reference;

  std::string table_csv() const;
};

// Candidate values on the validation split: per-unit cate (CATE mode) or the
// ATE on each bootstrap replicate (ATE mode).
std::vector<double> candidate_scores(const FittedEstimator& fitted,
                                     const TabularDataset& validation,
                                     const std::vector<TabularDataset>& replicates,
                                     SelectionMode mode);

SelectionResult grid_search(const HyperGrid& grid, const FitSpec& base, const CausalDag& dag,
                            const TabularDataset& train, const TabularDataset& validation,
                            const SelectionOptions& options);

}  // namespace dagcausal

#endif  // DAGCAUSAL_SELECTION_H_
