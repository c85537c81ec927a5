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

#include "dagcausal/simulate.h"

#include <cmath>
#include <numbers>

#include "dagcausal/errors.h"
#include "dagcausal/rng.h"

namespace dagcausal {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw ContractError(std::string("linear SCM ") + what + " must be finite");
    }
  }
}

std::string covariate_name(std::size_t k) { return "x" + std::to_string(k + 1); }

}  // namespace

nlohmann::json LinearScmSpec::to_json() const {
  return {{"dim", dim},
          {"binary_covariates", binary_covariates},
          {"propensity_intercept", propensity_intercept},
          {"propensity_weights", propensity_weights},
          {"outcome_intercept", outcome_intercept},
          {"outcome_weights", outcome_weights},
          {"tau", tau},
          {"tau_weights", tau_weights},
          {"noise_sd", noise_sd},
          {"randomized", randomized}};
}

LinearScmSpec LinearScmSpec::from_json(const nlohmann::json& j) {
  LinearScmSpec s;
  try {
    s.dim = j.value("dim", s.dim);
    s.binary_covariates = j.value("binary_covariates", s.binary_covariates);
    s.propensity_intercept = j.value("propensity_intercept", s.propensity_intercept);
    s.outcome_intercept = j.value("outcome_intercept", s.outcome_intercept);
    s.tau = j.value("tau", s.tau);
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.randomized = j.value("randomized", s.randomized);
    if (j.contains("propensity_weights"))
      s.propensity_weights = j.at("propensity_weights").get<std::vector<double>>();
    if (j.contains("outcome_weights"))
      s.outcome_weights = j.at("outcome_weights").get<std::vector<double>>();
    if (j.contains("tau_weights"))
      s.tau_weights = j.at("tau_weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed linear SCM spec: ") + e.what());
  }
  return s;
}

CausalDag linear_scm_dag(const LinearScmSpec& spec) {
  std::vector<DagNode> nodes;
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < spec.dim; ++k)
    nodes.push_back({covariate_name(k), NodeRole::kConfounder});
  const std::size_t a = spec.dim, y = spec.dim + 1;
  nodes.push_back({"A", NodeRole::kTreatment});
  nodes.push_back({"Y", NodeRole::kOutcome});
  for (std::size_t k = 0; k < spec.dim; ++k) {
    edges.emplace_back(k, a);
    edges.emplace_back(k, y);
  }
  edges.emplace_back(a, y);
  return CausalDag(std::move(nodes), std::move(edges));
}

TabularDataset simulate_linear_scm(std::size_t n, const LinearScmSpec& spec,
                                   std::uint64_t seed) {
  if (n == 0) throw ContractError("simulate_linear_scm needs n >= 1");
  if (spec.dim == 0 || spec.binary_covariates > spec.dim)
    throw ContractError("linear SCM covariate counts are inconsistent");
  if (spec.propensity_weights.size() != spec.dim ||
      spec.outcome_weights.size() != spec.dim ||
      (!spec.tau_weights.empty() && spec.tau_weights.size() != spec.dim)) {
    throw ContractError("linear SCM weight vectors must have length dim");
  }
  check_finite(spec.propensity_weights, "propensity weights");
  check_finite(spec.outcome_weights, "outcome weights");
  check_finite(spec.tau_weights, "tau weights");
  check_finite({spec.propensity_intercept, spec.outcome_intercept, spec.tau,
                spec.noise_sd},
               "scalars");

  Rng rng(seed, /*stream=*/0x11);
  const std::size_t first_binary = spec.dim - spec.binary_covariates;
  std::vector<std::vector<double>> x(spec.dim, std::vector<double>(n));
  std::vector<double> a(n), y(n);
  GroundTruth truth;
  truth.source = "linear-scm";
  truth.version = std::string(kLinearScmVersion);
  truth.cate.resize(n);
  truth.propensity.resize(n);
  truth.mu0.resize(n);
  truth.mu1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lin_p = spec.propensity_intercept, lin_y = spec.outcome_intercept;
    double tau = spec.tau;
    for (std::size_t k = 0; k < spec.dim; ++k) {
      const double v = k >= first_binary ? (rng.bernoulli(0.5) ? 1.0 : 0.0)
                                         : rng.normal();
      x[k][i] = v;
      lin_p += spec.propensity_weights[k] * v;
      lin_y += spec.outcome_weights[k] * v;
      if (!spec.tau_weights.empty()) tau += spec.tau_weights[k] * v;
    }
    const double p = spec.randomized ? 0.5 : logistic(lin_p);
    a[i] = rng.bernoulli(p) ? 1.0 : 0.0;
    y[i] = lin_y + tau * a[i] + spec.noise_sd * rng.normal();
    truth.cate[i] = tau;
    truth.propensity[i] = p;
    truth.mu0[i] = lin_y;
    truth.mu1[i] = lin_y + tau;
  }
  double ate = spec.tau;
  for (std::size_t k = first_binary; k < spec.dim && !spec.tau_weights.empty(); ++k)
    ate += 0.5 * spec.tau_weights[k];
  truth.true_ate = ate;

  TabularDataset data;
  for (std::size_t k = 0; k < spec.dim; ++k) {
    data.add_column({covariate_name(k),
                     k >= first_binary ? ColumnKind::kBinary : ColumnKind::kContinuous,
                     std::move(x[k]), covariate_name(k)});
  }
  data.add_column({"A", ColumnKind::kBinary, std::move(a), std::string("A")});
  data.add_column({"Y", ColumnKind::kContinuous, std::move(y), std::string("Y")});
  data.set_treatment_column("A");
  data.set_outcome_column("Y");
  data.set_ground_truth(std::move(truth));
  return data;
}

double demand_psi(double u) {
  const double d = u - 5.0;
  return 2.0 * (std::pow(d, 4) / 600.0 + std::exp(-4.0 * d * d) + u / 10.0 - 2.0);
}

DemandSample simulate_demand(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ContractError("simulate_demand needs n >= 1");
  Rng rng(seed, /*stream=*/0xD3);
  DemandSample s;
  for (auto* v : {&s.u, &s.z, &s.w, &s.a, &s.y}) v->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform(0.0, 10.0);
    const double psi = demand_psi(u);
    const double z = 2.0 * std::sin(2.0 * std::numbers::pi * u / 10.0) + rng.normal();
    const double w = 7.0 * psi + 45.0 + rng.normal();
    const double a = 35.0 + (z + 3.0) * psi + rng.normal();
    const double y = 100.0 + (10.0 + a) * psi - 2.0 * a + 0.1 * (w - 45.0) + rng.normal();
    s.u[i] = u;
    s.z[i] = z;
    s.w[i] = w;
    s.a[i] = a;
    s.y[i] = y;
  }
  return s;
}

CausalDag demand_dag() {
  return CausalDag::from_names(
      {{"U", NodeRole::kUnmeasured},
       {"Z", NodeRole::kTreatmentProxy},
       {"W", NodeRole::kOutcomeProxy},
       {"A", NodeRole::kTreatment},
       {"Y", NodeRole::kOutcome}},
      {{"A", "Y"}, {"U", "A"}, {"U", "Y"}, {"U", "Z"}, {"U", "W"}, {"Z", "A"},
       {"W", "Y"}});
}

TabularDataset demand_dataset(const DemandSample& sample) {
  TabularDataset data;
  data.add_column({"Z", ColumnKind::kContinuous, sample.z, std::string("Z")});
  data.add_column({"W", ColumnKind::kContinuous, sample.w, std::string("W")});
  data.add_column({"A", ColumnKind::kContinuous, sample.a, std::string("A")});
  data.add_column({"Y", ColumnKind::kContinuous, sample.y, std::string("Y")});
  data.set_treatment_column("A");
  data.set_outcome_column("Y");
  GroundTruth truth;
  truth.source = "demand";
  truth.version = std::string(kDemandScmVersion);
  data.set_ground_truth(std::move(truth));
  return data;
}

std::vector<double> demand_price_grid() {
  std::vector<double> grid(kDemandGridSize);
  for (std::size_t i = 0; i < kDemandGridSize; ++i) {
    grid[i] = kDemandPriceLow + (kDemandPriceHigh - kDemandPriceLow) *
                                    static_cast<double>(i) /
                                    static_cast<double>(kDemandGridSize - 1);
  }
  return grid;
}

MonteCarloMoment demand_psi_moment(std::size_t draws, std::uint64_t seed) {
  if (draws < 2) throw ContractError("Monte Carlo needs at least two draws");
  Rng rng(seed, /*stream=*/0x3C);
  // Welford keeps the variance accurate for 10^7 draws.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double v = demand_psi(rng.uniform(0.0, 10.0));
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(draws - 1);
  return {mean, std::sqrt(var / static_cast<double>(draws)), draws};
}

double demand_expected_psi() {
  static const double cached = demand_psi_moment(1'000'000, 20240601).mean;
  return cached;
}

double demand_true_potential_outcome(double a) {
  const double epsi = demand_expected_psi();
  return 100.0 + (10.0 + a) * epsi - 2.0 * a + 0.1 * (7.0 * epsi);
}

}  // namespace dagcausal
