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

#include "dagcausal/metrics.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dagcausal/errors.h"
#include "dagcausal/simulate.h"

namespace dagcausal {

double nrmse(std::span<const double> reference, std::span<const double> estimate) {
  const std::size_t n = reference.size();
  if (estimate.size() != n) {
    throw ContractError("nrmse operands differ in length: " + std::to_string(n) + " vs " +
                        std::to_string(estimate.size()));
  }
  if (n < 2) throw ContractError("nrmse needs at least two values");
  double mean = 0.0;
  for (double r : reference) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (reference[i] - mean) * (reference[i] - mean);
    sq += (reference[i] - estimate[i]) * (reference[i] - estimate[i]);
  }
  if (var == 0.0) throw DegenerateReferenceError("nrmse reference has zero variance");
  // The (n - 1) factors cancel.
  return std::sqrt(sq / var);
}

double c_mse(std::span<const double> estimated, std::span<const double> truth) {
  if (estimated.size() != kDemandGridSize || truth.size() != kDemandGridSize) {
    throw ContractError("c_mse needs two curves of " + std::to_string(kDemandGridSize) +
                        " points, got " + std::to_string(estimated.size()) + " and " +
                        std::to_string(truth.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    s += (estimated[i] - truth[i]) * (estimated[i] - truth[i]);
  }
  return s / static_cast<double>(truth.size());
}

MeanSe mean_se(std::span<const double> values) {
  if (values.empty()) throw ContractError("mean_se of an empty sample");
  const double n = static_cast<double>(values.size());
  MeanSe out;
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw ContractError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level outside [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

MedianIqr median_iqr(std::span<const double> values) {
  return {quantile(values, 0.5), quantile(values, 0.25), quantile(values, 0.75)};
}

}  // namespace dagcausal
