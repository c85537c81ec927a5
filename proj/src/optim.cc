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

#include "dagcausal/optim.h"

#include <cmath>

#include "dagcausal/errors.h"

namespace dagcausal::nn {

AdamState make_adam_state(std::span<const Var> params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p->value.shape(), 0.0);
    state.second_moment.emplace_back(p->value.shape(), 0.0);
  }
  return state;
}

void adam_step(std::span<const Var> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ContractError("adam_step: state tracks " +
                        std::to_string(state.first_moment.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->has_grad()) {
      throw ContractError("adam_step: parameter '" + params[i]->name +
                          "' has no gradient");
    }
    if (params[i]->value.shape() != state.first_moment[i].shape()) {
      throw ContractError("adam_step: moment shape mismatch for '" +
                          params[i]->name + "'");
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->value.data();
    const auto grad = params[i]->grad.data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = grad[j] + c.l2_penalty * theta[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      theta[j] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

void zero_grad(std::span<const Var> params) {
  for (const auto& p : params) p->ensure_grad().fill(0.0);
}

}  // namespace dagcausal::nn
