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

#ifndef DAGCAUSAL_TESTS_TEST_UTIL_H_
#define DAGCAUSAL_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dagcausal/autodiff.h"
#include "dagcausal/rng.h"
#include "dagcausal/tensor.h"

namespace dagcausal::testing {

// Worst |analytic - numeric| / max(|analytic|, |numeric|, 1e-2) over every
// element of `params`. The floor turns the check into an absolute 1e-6
// bound for gradients near zero when compared against 1e-4.
inline double max_gradient_error(const std::vector<nn::Var>& params,
                                 const std::function<nn::Var(nn::Tape&)>& loss_fn,
                                 double h = 1e-5) {
  for (const auto& p : params) p->ensure_grad().fill(0.0);
  {
    nn::Tape tape;
    tape.backward(loss_fn(tape));
  }
  double worst = 0.0;
  for (const auto& p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      nn::Tape t1;
      const double up = loss_fn(t1)->value.item();
      p->value[i] = saved - h;
      nn::Tape t2;
      const double down = loss_fn(t2)->value.item();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

}  // namespace dagcausal::testing

#endif  // DAGCAUSAL_TESTS_TEST_UTIL_H_
