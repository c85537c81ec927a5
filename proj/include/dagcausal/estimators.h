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

#ifndef DAGCAUSAL_ESTIMATORS_H_
#define DAGCAUSAL_ESTIMATORS_H_

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dagcausal/dataset.h"
#include "dagcausal/transformer.h"
#include "json.hpp"

namespace dagcausal {

inline constexpr double kDefaultPropensityClamp = 0.01;
// Raw propensities outside [kPositivityLow, 1 - kPositivityLow] are flagged.
inline constexpr double kPositivityLow = 0.01;

struct Nuisances {
  std::vector<double> propensity;  // after clamping
  std::vector<double> mu0;
  std::vector<double> mu1;
};

struct Diagnostics {
  double propensity_min = 0.0;  // raw
  double propensity_max = 0.0;  // raw
  std::size_t clamped = 0;
  std::size_t positivity_flags = 0;
  double effective_sample_size = 0.0;
};

struct EstimateReport {
  std::string method;
  // Absent only for a proximal curve whose grid is not {0, 1}.
  std::optional<double> ate;
  std::optional<std::vector<double>> cate;
  // (a, E[Y^a]) in grid order.
  std::vector<std::pair<double, double>> potential_outcomes;
  Nuisances nuisances;
  std::optional<Diagnostics> diagnostics;

  // `include_units` adds the per-unit cate and nuisance vectors.
  nlohmann::json to_json(bool include_units = false) const;
  // "unit,cate" rows; ContractError without cate.
  std::string cate_csv() const;
};

// Table-driven estimators on plain per-unit vectors.
EstimateReport gformula_from_nuisances(std::span<const double> mu0,
                                       std::span<const double> mu1);
EstimateReport iptw_from_nuisances(std::span<const double> a, std::span<const double> y,
                                   std::span<const double> propensity,
                                   double clamp = kDefaultPropensityClamp);
EstimateReport aipw_from_nuisances(std::span<const double> a, std::span<const double> y,
                                   std::span<const double> mu0,
                                   std::span<const double> mu1,
                                   std::span<const double> propensity,
                                   double clamp = kDefaultPropensityClamp);

// Model-driven estimators. The model must carry the needed head (an outcome
// head for the G-formula, a treatment head for IPTW), else ConfigError.
EstimateReport estimate_gformula(const DagTransformer& model, const TabularDataset& data);
EstimateReport estimate_iptw(const DagTransformer& model, const TabularDataset& data,
                             double clamp = kDefaultPropensityClamp);
// Pass the same model twice for joint training.
EstimateReport estimate_aipw(const DagTransformer& outcome_model,
                             const DagTransformer& propensity_model,
                             const TabularDataset& data,
                             double clamp = kDefaultPropensityClamp);

// Bridge evaluated at treatment level a over every heldout draw.
using BridgeFunction = std::function<std::vector<double>(double a)>;

EstimateReport estimate_proximal(const BridgeFunction& bridge,
                                 std::span<const double> a_grid);
// `heldout` supplies the (W, X) draws; its treatment column is overwritten.
EstimateReport estimate_proximal(const DagTransformer& model, const TabularDataset& heldout,
                                 std::span<const double> a_grid);

// Mean cate per group label. ContractError without cate or on a length
// mismatch.
std::map<double, double> cate_by_group(const EstimateReport& report,
                                       std::span<const double> groups);

}  // namespace dagcausal

#endif  // DAGCAUSAL_ESTIMATORS_H_
