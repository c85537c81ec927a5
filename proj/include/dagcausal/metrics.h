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

#ifndef DAGCAUSAL_METRICS_H_
#define DAGCAUSAL_METRICS_H_

#include <span>

namespace dagcausal {

// sqrt(sum((ref - est)^2) / (n - 1) / var(ref)) with var the n - 1 sample
// variance. Throws ContractError on unequal lengths or n < 2, and
// DegenerateReferenceError when var(ref) == 0.
double nrmse(std::span<const double> reference, std::span<const double> estimate);

// Mean squared difference between two 10-point potential-outcome curves.
double c_mse(std::span<const double> estimated, std::span<const double> truth);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sd / sqrt(n); 0 for a single value
};
MeanSe mean_se(std::span<const double> values);

struct MedianIqr {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};
// Linear-interpolation quantiles (type 7).
MedianIqr median_iqr(std::span<const double> values);
double quantile(std::span<const double> values, double p);

}  // namespace dagcausal

#endif  // DAGCAUSAL_METRICS_H_
