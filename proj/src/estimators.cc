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

#include "dagcausal/estimators.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dagcausal/errors.h"

namespace dagcausal {
namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void require_lengths(std::size_t n, std::initializer_list<std::size_t> others) {
  if (n == 0) throw ContractError("estimator needs at least one unit");
  for (std::size_t m : others) {
    if (m != n) {
      throw DimensionError("nuisance length " + std::to_string(m) +
                           " does not match " + std::to_string(n) + " units");
    }
  }
}

void require_binary(std::span<const double> a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0.0 && a[i] != 1.0) {
      throw DataError("treatment of unit " + std::to_string(i) + " is not 0/1");
    }
  }
}

// Clamps the propensities and fills in the overlap diagnostics.
std::vector<double> clamp_propensity(std::span<const double> a,
                                     std::span<const double> raw, double clamp,
                                     Diagnostics& diag) {
  if (!(clamp > 0.0 && clamp < 0.5)) {
    throw ConfigError("propensity clamp must lie in (0, 0.5)");
  }
  std::vector<double> out(raw.size());
  diag.propensity_min = *std::min_element(raw.begin(), raw.end());
  diag.propensity_max = *std::max_element(raw.begin(), raw.end());
  double wsum = 0.0, w2sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw DataError("non-finite propensity at unit " + std::to_string(i));
    if (raw[i] < kPositivityLow || raw[i] > 1.0 - kPositivityLow) ++diag.positivity_flags;
    out[i] = std::clamp(raw[i], clamp, 1.0 - clamp);
    if (out[i] != raw[i]) ++diag.clamped;
    const double w = a[i] == 1.0 ? 1.0 / out[i] : 1.0 / (1.0 - out[i]);
    wsum += w;
    w2sum += w * w;
  }
  diag.effective_sample_size = wsum * wsum / w2sum;
  return out;
}

std::size_t outcome_head(const DagTransformer& model) {
  const auto y = model.dag().outcome();
  const auto& heads = model.layout().heads;
  if (!y || std::find(heads.begin(), heads.end(), *y) == heads.end()) {
    throw ConfigError("model has no outcome head");
  }
  return model.head_for_node(*y);
}

std::size_t treatment_head(const DagTransformer& model) {
  const auto a = model.dag().treatment();
  const auto& heads = model.layout().heads;
  if (!a || std::find(heads.begin(), heads.end(), *a) == heads.end()) {
    throw ConfigError("model has no treatment head");
  }
  return model.head_for_node(*a);
}

const std::vector<double>& node_values(const DagTransformer& model,
                                       const TabularDataset& data, std::size_t node) {
  return data.require_node(model.dag().node(node).name).values;
}

}  // namespace

nlohmann::json EstimateReport::to_json(bool include_units) const {
  nlohmann::json j;
  j["method"] = method;
  j["ate"] = ate ? nlohmann::json(*ate) : nlohmann::json(nullptr);
  if (!potential_outcomes.empty()) {
    nlohmann::json po = nlohmann::json::array();
    for (const auto& [a, v] : potential_outcomes) po.push_back({{"a", a}, {"value", v}});
    j["potential_outcomes"] = po;
  }
  if (diagnostics) {
    j["diagnostics"] = {{"propensity_min", diagnostics->propensity_min},
                        {"propensity_max", diagnostics->propensity_max},
                        {"clamped", diagnostics->clamped},
                        {"positivity_flags", diagnostics->positivity_flags},
                        {"effective_sample_size", diagnostics->effective_sample_size}};
  }
  if (include_units) {
    if (cate) j["cate"] = *cate;
    nlohmann::json nu = nlohmann::json::object();
    if (!nuisances.propensity.empty()) nu["propensity"] = nuisances.propensity;
    if (!nuisances.mu0.empty()) nu["mu0"] = nuisances.mu0;
    if (!nuisances.mu1.empty()) nu["mu1"] = nuisances.mu1;
    j["nuisances"] = nu;
  }
  return j;
}

std::string EstimateReport::cate_csv() const {
  if (!cate) throw ContractError("report for " + method + " has no cate");
  std::ostringstream out;
  out << "unit,cate\n";
  for (std::size_t i = 0; i < cate->size(); ++i) out << i << ',' << format_double((*cate)[i]) << '\n';
  return out.str();
}

EstimateReport gformula_from_nuisances(std::span<const double> mu0,
                                       std::span<const double> mu1) {
  require_lengths(mu0.size(), {mu1.size()});
  EstimateReport r;
  r.method = "gformula";
  std::vector<double> cate(mu0.size());
  for (std::size_t i = 0; i < cate.size(); ++i) cate[i] = mu1[i] - mu0[i];
  r.ate = mean_of(cate);
  r.cate = std::move(cate);
  r.nuisances.mu0.assign(mu0.begin(), mu0.end());
  r.nuisances.mu1.assign(mu1.begin(), mu1.end());
  return r;
}

EstimateReport iptw_from_nuisances(std::span<const double> a, std::span<const double> y,
                                   std::span<const double> propensity, double clamp) {
  require_lengths(a.size(), {y.size(), propensity.size()});
  require_binary(a);
  EstimateReport r;
  r.method = "ipw";
  Diagnostics diag;
  std::vector<double> pi = clamp_propensity(a, propensity, clamp, diag);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * y[i] / pi[i] - (1.0 - a[i]) * y[i] / (1.0 - pi[i]);
  r.ate = s / static_cast<double>(a.size());
  r.nuisances.propensity = std::move(pi);
  r.diagnostics = diag;
  return r;
}

EstimateReport aipw_from_nuisances(std::span<const double> a, std::span<const double> y,
                                   std::span<const double> mu0,
                                   std::span<const double> mu1,
                                   std::span<const double> propensity, double clamp) {
  require_lengths(a.size(), {y.size(), mu0.size(), mu1.size(), propensity.size()});
  require_binary(a);
  EstimateReport r;
  r.method = "aipw";
  Diagnostics diag;
  std::vector<double> pi = clamp_propensity(a, propensity, clamp, diag);
  std::vector<double> cate(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double treated = mu1[i] + a[i] * (y[i] - mu1[i]) / pi[i];
    const double control = mu0[i] + (1.0 - a[i]) * (y[i] - mu0[i]) / (1.0 - pi[i]);
    cate[i] = treated - control;
  }
  r.ate = mean_of(cate);
  r.cate = std::move(cate);
  r.nuisances.propensity = std::move(pi);
  r.nuisances.mu0.assign(mu0.begin(), mu0.end());
  r.nuisances.mu1.assign(mu1.begin(), mu1.end());
  r.diagnostics = diag;
  return r;
}

EstimateReport estimate_gformula(const DagTransformer& model, const TabularDataset& data) {
  const std::size_t h = outcome_head(model);
  if (!model.dag().treatment()) throw ConfigError("model DAG has no treatment node");
  const Tensor x = model.design_matrix(data);
  const auto mu1 = model.counterfactual_predict(x, 1.0)[h];
  const auto mu0 = model.counterfactual_predict(x, 0.0)[h];
  return gformula_from_nuisances(mu0, mu1);
}

EstimateReport estimate_iptw(const DagTransformer& model, const TabularDataset& data,
                             double clamp) {
  const std::size_t h = treatment_head(model);
  const auto y = model.dag().outcome();
  if (!y) throw ConfigError("model DAG has no outcome node");
  const auto pi = model.predict(model.design_matrix(data))[h];
  return iptw_from_nuisances(node_values(model, data, *model.dag().treatment()),
                             node_values(model, data, *y), pi, clamp);
}

EstimateReport estimate_aipw(const DagTransformer& outcome_model,
                             const DagTransformer& propensity_model,
                             const TabularDataset& data, double clamp) {
  const std::size_t hy = outcome_head(outcome_model);
  const std::size_t ha = treatment_head(propensity_model);
  const Tensor xo = outcome_model.design_matrix(data);
  const auto mu1 = outcome_model.counterfactual_predict(xo, 1.0)[hy];
  const auto mu0 = outcome_model.counterfactual_predict(xo, 0.0)[hy];
  const auto pi = propensity_model.predict(propensity_model.design_matrix(data))[ha];
  const CausalDag& dag = outcome_model.dag();
  return aipw_from_nuisances(node_values(outcome_model, data, *dag.treatment()),
                             node_values(outcome_model, data, *dag.outcome()), mu0, mu1, pi,
                             clamp);
}

EstimateReport estimate_proximal(const BridgeFunction& bridge,
                                 std::span<const double> a_grid) {
  if (a_grid.empty()) throw ContractError("proximal estimate needs a nonempty treatment grid");
  EstimateReport r;
  r.method = "proximal";
  for (double a : a_grid) {
    const std::vector<double> h = bridge(a);
    if (h.empty()) throw ContractError("proximal estimate needs at least one heldout draw");
    r.potential_outcomes.emplace_back(a, mean_of(h));
  }
  if (a_grid.size() == 2 && a_grid[0] == 0.0 && a_grid[1] == 1.0) {
    r.ate = r.potential_outcomes[1].second - r.potential_outcomes[0].second;
  }
  return r;
}

EstimateReport estimate_proximal(const DagTransformer& model, const TabularDataset& heldout,
                                 std::span<const double> a_grid) {
  const std::size_t h = outcome_head(model);
  if (heldout.rows() == 0) throw ContractError("proximal estimate needs at least one heldout draw");
  const Tensor x = model.design_matrix(heldout);
  return estimate_proximal(
      [&](double a) { return model.counterfactual_predict(x, a)[h]; }, a_grid);
}

std::map<double, double> cate_by_group(const EstimateReport& report,
                                       std::span<const double> groups) {
  if (!report.cate) throw ContractError("report for " + report.method + " has no cate");
  const auto& cate = *report.cate;
  if (groups.size() != cate.size()) {
    throw ContractError("grouping covers " + std::to_string(groups.size()) + " units, cate has " +
                        std::to_string(cate.size()));
  }
  std::map<double, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < cate.size(); ++i) {
    auto& [s, c] = acc[groups[i]];
    s += cate[i];
    ++c;
  }
  std::map<double, double> out;
  for (const auto& [g, sc] : acc) out[g] = sc.first / static_cast<double>(sc.second);
  return out;
}

}  // namespace dagcausal
