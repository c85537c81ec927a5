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

#ifndef DAGCAUSAL_OPTIM_H_
#define DAGCAUSAL_OPTIM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dagcausal/autodiff.h"

namespace dagcausal::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // lambda * theta is added to each gradient before the moment updates.
  double l2_penalty = 0.0;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

AdamState make_adam_state(std::span<const Var> params, AdamConfig config);

// One Adam update of every parameter from its accumulated grad. Throws
// ContractError if a parameter has no gradient or the state does not match.
void adam_step(std::span<const Var> params, AdamState& state);

// Allocates (if needed) and zeroes every parameter gradient.
void zero_grad(std::span<const Var> params);

}  // namespace dagcausal::nn

#endif  // DAGCAUSAL_OPTIM_H_
