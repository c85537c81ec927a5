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

#ifndef DAGCAUSAL_TRAIN_H_
#define DAGCAUSAL_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dagcausal/dataset.h"
#include "dagcausal/objectives.h"
#include "dagcausal/optim.h"
#include "dagcausal/transformer.h"
#include "json.hpp"

namespace dagcausal {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  nn::AdamConfig adam;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainingLog {
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
  // Kernel bandwidth used by an NMMR objective (in standardized units).
  double kernel_bandwidth = 0.0;

  nlohmann::json to_json() const;
};

// Per-column mean/sd of the kernel arguments (A, Z, X) on the training rows.
struct KernelFeatureScaler {
  std::vector<std::size_t> positions;  // input positions of the kernel nodes
  std::vector<double> mean;
  std::vector<double> scale;

  static KernelFeatureScaler fit(const DagTransformer& model, const Tensor& design);
  // rows x |positions| standardized kernel arguments of the given rows.
  Tensor features(const Tensor& design) const;
};

// Fits the model's standardizer on `data`, then runs mini-batch Adam for
// `config.epochs` epochs. Throws ConfigError when the objective needs a head
// the model lacks and DivergedError on a non-finite batch loss.
TrainingLog train(DagTransformer& model, const TabularDataset& data,
                  const Objective& objective, const TrainConfig& config);

}  // namespace dagcausal

#endif  // DAGCAUSAL_TRAIN_H_
