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

#ifndef DAGCAUSAL_SIMULATE_H_
#define DAGCAUSAL_SIMULATE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "dagcausal/causal_dag.h"
#include "dagcausal/dataset.h"
#include "json.hpp"

namespace dagcausal {

// Linear structural causal model with observed confounders x1..xk:
//   X ~ N(0, I) (the last `binary_covariates` entries ~ Bernoulli(1/2)),
//   A ~ Bernoulli(sigmoid(c + w.x)) or Bernoulli(1/2) when randomized,
//   Y = b0 + tau(x) A + beta.x + noise_sd * eps,  tau(x) = tau + t.x.
struct LinearScmSpec {
  std::size_t dim = 3;
  std::size_t binary_covariates = 0;
  double propensity_intercept = 0.0;
  std::vector<double> propensity_weights = {0.8, -0.5, 0.3};
  double outcome_intercept = 0.0;
  std::vector<double> outcome_weights = {1.0, 1.0, -0.5};
  double tau = 2.0;
  std::vector<double> tau_weights;  // empty means homogeneous
  double noise_sd = 1.0;
  bool randomized = false;

  nlohmann::json to_json() const;
  static LinearScmSpec from_json(const nlohmann::json& j);
};

inline constexpr std::string_view kLinearScmVersion = "linear-scm/1";

// Nodes x1..xk (confounders), A (treatment), Y (outcome); edges x->A, x->Y,
// A->Y. Columns carry the node names.
CausalDag linear_scm_dag(const LinearScmSpec& spec);
TabularDataset simulate_linear_scm(std::size_t n, const LinearScmSpec& spec,
                                   std::uint64_t seed);

// Demand benchmark with unmeasured demand U, fuel cost Z, views W, price A
// and sales Y.
struct DemandSample {
  std::vector<double> u, z, w, a, y;
  std::size_t size() const { return a.size(); }
};

inline constexpr std::string_view kDemandScmVersion = "demand-scm/1";
inline constexpr std::size_t kDemandGridSize = 10;
inline constexpr double kDemandPriceLow = 10.0;
inline constexpr double kDemandPriceHigh = 30.0;
inline constexpr std::size_t kDemandHeldoutDraws = 1000;
inline constexpr std::array<std::size_t, 4> kDemandSampleSizes = {1000, 5000, 10000,
                                                                  50000};
inline constexpr std::size_t kDemandReplicates = 20;

double demand_psi(double u);
DemandSample simulate_demand(std::size_t n, std::uint64_t seed);
// Order [U, Z, W, A, Y]; edges A->Y, U->{A,Y,Z,W}, Z->A, W->Y.
CausalDag demand_dag();
// Columns Z, W, A, Y bound to their nodes. U is never exported.
TabularDataset demand_dataset(const DemandSample& sample);
std::vector<double> demand_price_grid();

struct MonteCarloMoment {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

// Monte Carlo estimate of E[psi(U)], U ~ Uniform(0, 10).
MonteCarloMoment demand_psi_moment(std::size_t draws, std::uint64_t seed);

// E[Y^a] = 100 + (10 + a) E[psi] - 2a + 0.1 (E[W] - 45) with E[W] - 45 =
// 7 E[psi]; E[psi] is estimated once from 10^6 draws and cached.
double demand_true_potential_outcome(double a);
double demand_expected_psi();

}  // namespace dagcausal

#endif  // DAGCAUSAL_SIMULATE_H_
