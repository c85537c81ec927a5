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

#include "dagcausal/pipeline.h"

#include <cmath>
#include <limits>

#include "dagcausal/errors.h"

namespace dagcausal {

namespace {

constexpr std::pair<EstimatorMethod, std::string_view> kNames[] = {
    {EstimatorMethod::kGFormula, "gformula"},
    {EstimatorMethod::kIpw, "ipw"},
    {EstimatorMethod::kAipwJoint, "aipw-joint"},
    {EstimatorMethod::kAipwSeparate, "aipw-separate"},
    {EstimatorMethod::kProximalU, "proximal-u"},
    {EstimatorMethod::kProximalV, "proximal-v"},
};

Method layout_method(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::kGFormula: return Method::kGFormula;
    case EstimatorMethod::kIpw: return Method::kIpw;
    case EstimatorMethod::kAipwJoint: return Method::kAipw;
    case EstimatorMethod::kAipwSeparate: return Method::kGFormula;
    default: return Method::kProximal;
  }
}

}  // namespace

std::string_view estimator_method_name(EstimatorMethod m) {
  for (const auto& [k, v] : kNames)
    if (k == m) return v;
  return "unknown";
}

EstimatorMethod parse_estimator_method(std::string_view name) {
  for (const auto& [k, v] : kNames)
    if (v == name) return k;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected gformula, ipw, aipw-joint, aipw-separate, proximal-u or "
                    "proximal-v)");
}

bool is_proximal(EstimatorMethod m) {
  return m == EstimatorMethod::kProximalU || m == EstimatorMethod::kProximalV;
}

nlohmann::json FitSpec::to_json() const {
  nlohmann::json j = {{"method", estimator_method_name(method)},
                      {"model", model.to_json()},
                      {"train", train.to_json()},
                      {"propensity_clamp", propensity_clamp}};
  if (method == EstimatorMethod::kAipwSeparate) {
    j["propensity_model"] = propensity_model.value_or(model).to_json();
    j["propensity_train"] = propensity_train.value_or(train).to_json();
  }
  if (kernel_bandwidth) j["kernel_bandwidth"] = *kernel_bandwidth;
  return j;
}

double FittedEstimator::final_loss() const {
  if (logs.empty() || logs.front().epoch_loss.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return logs.front().epoch_loss.back();
}

std::size_t FittedEstimator::parameter_count() const {
  std::size_t n = 0;
  for (const auto& m : models) n += m.parameter_count();
  return n;
}

void check_method_roles(EstimatorMethod method, const CausalDag& dag) {
  (void)input_nodes_for(layout_method(method), dag);
  if (method == EstimatorMethod::kAipwSeparate) (void)input_nodes_for(Method::kIpw, dag);
}

FittedEstimator fit_estimator(const FitSpec& spec, const CausalDag& dag,
                              const TabularDataset& train_data) {
  check_method_roles(spec.method, dag);
  FittedEstimator out{spec.method, {}, {}, spec.propensity_clamp};
  auto fit_one = [&](const ModelConfig& mc, Method layout, const Objective& obj,
                     const TrainConfig& tc) {
    DagTransformer model = DagTransformer::for_dataset(mc, dag, layout, train_data);
    out.logs.push_back(train(model, train_data, obj, tc));
    out.models.push_back(std::move(model));
  };
  switch (spec.method) {
    case EstimatorMethod::kGFormula:
      fit_one(spec.model, Method::kGFormula, GFormulaObjective{}, spec.train);
      break;
    case EstimatorMethod::kIpw:
      fit_one(spec.model, Method::kIpw, IptwObjective{}, spec.train);
      break;
    case EstimatorMethod::kAipwJoint:
      fit_one(spec.model, Method::kAipw, AipwJointObjective{}, spec.train);
      break;
    case EstimatorMethod::kAipwSeparate:
      fit_one(spec.model, Method::kGFormula, GFormulaObjective{}, spec.train);
      fit_one(spec.propensity_model.value_or(spec.model), Method::kIpw, IptwObjective{},
              spec.propensity_train.value_or(spec.train));
      break;
    case EstimatorMethod::kProximalU:
    case EstimatorMethod::kProximalV: {
      // The weight penalty is part of the kernel objective, so the optimizer
      // applies none of its own.
      NmmrObjective obj;
      obj.variant = spec.method == EstimatorMethod::kProximalU ? NmmrVariant::kU : NmmrVariant::kV;
      obj.bandwidth = spec.kernel_bandwidth;
      obj.lambda = spec.train.adam.l2_penalty;
      TrainConfig tc = spec.train;
      tc.adam.l2_penalty = 0.0;
      fit_one(spec.model, Method::kProximal, obj, tc);
      break;
    }
  }
  return out;
}

EstimateReport run_estimator(const FittedEstimator& fitted, const TabularDataset& data) {
  EstimateReport r;
  switch (fitted.method) {
    case EstimatorMethod::kGFormula:
      r = estimate_gformula(fitted.models[0], data);
      break;
    case EstimatorMethod::kIpw:
      r = estimate_iptw(fitted.models[0], data, fitted.propensity_clamp);
      break;
    case EstimatorMethod::kAipwJoint:
      r = estimate_aipw(fitted.models[0], fitted.models[0], data, fitted.propensity_clamp);
      break;
    case EstimatorMethod::kAipwSeparate:
      r = estimate_aipw(fitted.models[0], fitted.models[1], data, fitted.propensity_clamp);
      break;
    default: {
      const double grid[] = {0.0, 1.0};
      return run_proximal(fitted, data, grid);
    }
  }
  r.method = std::string(estimator_method_name(fitted.method));
  return r;
}

EstimateReport run_proximal(const FittedEstimator& fitted, const TabularDataset& heldout,
                            std::span<const double> a_grid) {
  if (!is_proximal(fitted.method)) {
    throw ConfigError("method " + std::string(estimator_method_name(fitted.method)) +
                      " has no bridge function");
  }
  EstimateReport r = estimate_proximal(fitted.models[0], heldout, a_grid);
  r.method = std::string(estimator_method_name(fitted.method));
  return r;
}

}  // namespace dagcausal
