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

#ifndef DAGCAUSAL_PIPELINE_H_
#define DAGCAUSAL_PIPELINE_H_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dagcausal/causal_dag.h"
#include "dagcausal/dataset.h"
#include "dagcausal/estimators.h"
#include "dagcausal/train.h"
#include "dagcausal/transformer.h"

namespace dagcausal {

// Estimation strategy: which models are trained, with which loss, and which
// estimator consumes them.
enum class EstimatorMethod { kGFormula, kIpw, kAipwJoint, kAipwSeparate, kProximalU, kProximalV };

std::string_view estimator_method_name(EstimatorMethod m);
EstimatorMethod parse_estimator_method(std::string_view name);
bool is_proximal(EstimatorMethod m);

struct FitSpec {
  EstimatorMethod method = EstimatorMethod::kGFormula;
  ModelConfig model;
  TrainConfig train;
  // aipw-separate: the propensity model. Defaults to `model` / `train`.
  std::optional<ModelConfig> propensity_model;
  std::optional<TrainConfig> propensity_train;
  double propensity_clamp = kDefaultPropensityClamp;
  // Proximal: fixed kernel bandwidth; median heuristic when unset.
  std::optional<double> kernel_bandwidth;

  nlohmann::json to_json() const;
};

struct FittedEstimator {
  EstimatorMethod method;
  // One model, or (outcome, propensity) for aipw-separate.
  std::vector<DagTransformer> models;
  std::vector<TrainingLog> logs;
  double propensity_clamp = kDefaultPropensityClamp;

  // Last-epoch training loss of the first model (NaN with zero epochs).
  double final_loss() const;
  std::size_t parameter_count() const;
};

// Throws ConfigError when the DAG lacks a role the method needs.
void check_method_roles(EstimatorMethod method, const CausalDag& dag);

FittedEstimator fit_estimator(const FitSpec& spec, const CausalDag& dag,
                              const TabularDataset& train);

// Binary-treatment estimate on `data`. Proximal methods use `data` as the
// heldout (W, X) draws and the grid {0, 1}.
EstimateReport run_estimator(const FittedEstimator& fitted, const TabularDataset& data);
EstimateReport run_proximal(const FittedEstimator& fitted, const TabularDataset& heldout,
                            std::span<const double> a_grid);

}  // namespace dagcausal

#endif  // DAGCAUSAL_PIPELINE_H_
