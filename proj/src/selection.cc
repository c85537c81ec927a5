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

#include "dagcausal/selection.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "dagcausal/errors.h"
#include "dagcausal/metrics.h"

namespace dagcausal {

namespace {

nlohmann::json base_value(const FitSpec& base, const std::string& name) {
  const nlohmann::json model = base.model.to_json();
  const nlohmann::json train = base.train.to_json();
  if (model.contains(name)) return model.at(name);
  if (train.contains(name)) return train.at(name);
  throw ConfigError("unknown grid parameter '" + name + "'");
}

bool known_parameter(const std::string& name) {
  for (const char* p : kGridParameters)
    if (name == p) return true;
  return false;
}

}  // namespace

HyperGrid HyperGrid::from_json(const nlohmann::json& j, const FitSpec& base) {
  if (!j.is_object()) throw ConfigError("grid must be a JSON object of parameter lists");
  for (const auto& [k, v] : j.items()) {
    if (!known_parameter(k)) throw ConfigError("unknown grid parameter '" + k + "'");
    if (!v.is_array() || v.empty()) throw ConfigError("grid parameter '" + k + "' needs a nonempty list");
  }
  HyperGrid g;
  for (const char* p : kGridParameters) {
    const std::string name(p);
    std::vector<nlohmann::json> values;
    if (j.contains(name)) {
      for (const auto& v : j.at(name)) values.push_back(v);
    } else {
      values.push_back(base_value(base, name));
    }
    g.axes_.emplace_back(name, std::move(values));
  }
  return g;
}

std::size_t HyperGrid::size() const {
  std::size_t n = 1;
  for (const auto& [_, v] : axes_) n *= v.size();
  return n;
}

nlohmann::json HyperGrid::point(std::size_t i) const {
  if (i >= size()) throw ContractError("grid point " + std::to_string(i) + " out of range");
  nlohmann::json p = nlohmann::json::object();
  for (auto it = axes_.rbegin(); it != axes_.rend(); ++it) {
    p[it->first] = it->second[i % it->second.size()];
    i /= it->second.size();
  }
  return p;
}

nlohmann::json HyperGrid::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : axes_) j[k] = v;
  return j;
}

FitSpec apply_point(const FitSpec& base, const nlohmann::json& point) {
  auto apply = [&](const ModelConfig& mc, const TrainConfig& tc) {
    nlohmann::json m = mc.to_json(), t = tc.to_json();
    for (const auto& [k, v] : point.items()) {
      if (m.contains(k)) m[k] = v;
      else if (t.contains(k)) t[k] = v;
      else throw ConfigError("unknown grid parameter '" + k + "'");
    }
    return std::make_pair(ModelConfig::from_json(m), TrainConfig::from_json(t));
  };
  FitSpec out = base;
  std::tie(out.model, out.train) = apply(base.model, base.train);
  if (base.propensity_model || base.propensity_train) {
    auto [pm, pt] = apply(base.propensity_model.value_or(base.model),
                          base.propensity_train.value_or(base.train));
    out.propensity_model = pm;
    out.propensity_train = pt;
  }
  return out;
}

std::string config_hash(const nlohmann::json& point) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : point.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string_view selection_mode_name(SelectionMode m) {
  return m == SelectionMode::kCate ? "cate" : "ate";
}

SelectionMode parse_selection_mode(std::string_view name) {
  if (name == "cate") return SelectionMode::kCate;
  if (name == "ate") return SelectionMode::kAte;
  throw ConfigError("unknown selection mode '" + std::string(name) + "' (expected cate or ate)");
}

std::string SelectionResult::table_csv() const {
  std::ostringstream out;
  out << "rank,config_hash,nrmse,train_loss,diverged,parameters,grid_index\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& r = ranking[i];
    out << i + 1 << ',' << r.hash << ',' << (r.diverged ? "nan" : format_double(r.nrmse)) << ','
        << (std::isfinite(r.train_loss) ? format_double(r.train_loss) : "nan") << ','
        << (r.diverged ? 1 : 0) << ',' << r.parameters << ',' << r.grid_index << '\n';
  }
  return out.str();
}

std::vector<double> candidate_scores(const FittedEstimator& fitted,
                                     const TabularDataset& validation,
                                     const std::vector<TabularDataset>& replicates,
                                     SelectionMode mode) {
  if (mode == SelectionMode::kCate) {
    const EstimateReport r = run_estimator(fitted, validation);
    if (!r.cate) {
      throw ConfigError("method " + std::string(estimator_method_name(fitted.method)) +
                        " produces no per-unit cate; use ATE mode");
    }
    return *r.cate;
  }
  std::vector<double> out;
  for (const auto& rep : replicates) {
    const EstimateReport r = run_estimator(fitted, rep);
    out.push_back(r.ate.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  return out;
}

SelectionResult grid_search(const HyperGrid& grid, const FitSpec& base, const CausalDag& dag,
                            const TabularDataset& train_data, const TabularDataset& validation,
                            const SelectionOptions& options) {
  const std::size_t n = grid.size();
  if (n == 0) throw ConfigError("empty hyperparameter grid");
  check_method_roles(base.method, dag);
  if (is_proximal(base.method)) {
    throw ConfigError("grid search scores binary-treatment methods only");
  }
  if (options.mode == SelectionMode::kCate && base.method == EstimatorMethod::kIpw) {
    throw ConfigError("ipw produces no per-unit cate; use ATE mode");
  }
  if (options.mode == SelectionMode::kAte && options.ate_replicates < 2) {
    throw ConfigError("ATE-mode selection needs at least two bootstrap replicates");
  }

  const PlugInEstimator plugin = PlugInEstimator::fit(validation, options.forest);
  std::vector<TabularDataset> replicates;
  SelectionResult result;
  if (options.mode == SelectionMode::kCate) {
    result.reference = plugin.cate(validation);
  } else {
    for (std::size_t b = 0; b < options.ate_replicates; ++b) {
      replicates.push_back(bootstrap(validation, mix64(options.seed ^ (0xB5 + b))));
      result.reference.push_back(plugin.ate(replicates.back()));
    }
  }

  std::vector<CandidateRow> rows(n);
  std::vector<std::optional<FittedEstimator>> fitted(n);
  std::vector<std::exception_ptr> failures(n);
  auto work = [&](std::size_t i) {
    CandidateRow& row = rows[i];
    row.grid_index = i;
    row.point = grid.point(i);
    row.hash = config_hash(row.point);
    const FitSpec spec = apply_point(base, row.point);
    try {
      FittedEstimator fe = fit_estimator(spec, dag, train_data);
      row.train_loss = fe.final_loss();
      row.parameters = fe.parameter_count();
      const auto scores = candidate_scores(fe, validation, replicates, options.mode);
      row.nrmse = nrmse(result.reference, scores);
      if (!std::isfinite(row.nrmse)) {
        row.diverged = true;
        row.note = "non-finite estimate";
      } else {
        fitted[i] = std::move(fe);
      }
    } catch (const DivergedError& e) {
      row.diverged = true;
      row.note = e.what();
    } catch (...) {
      failures[i] = std::current_exception();
    }
    if (row.diverged) {
      row.nrmse = std::numeric_limits<double>::quiet_NaN();
      if (!row.parameters) {
        row.parameters = DagTransformer::for_dataset(spec.model, dag,
                                                     Method::kGFormula, train_data)
                             .parameter_count();
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  result.ranking = rows;
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const CandidateRow& a, const CandidateRow& b) {
                     if (a.diverged != b.diverged) return !a.diverged;
                     if (a.diverged) return a.grid_index < b.grid_index;
                     if (a.nrmse != b.nrmse) return a.nrmse < b.nrmse;
                     if (a.parameters != b.parameters) return a.parameters < b.parameters;
                     return a.grid_index < b.grid_index;
                   });
  if (result.ranking.front().diverged) {
    throw SelectionError("all " + std::to_string(n) + " candidates diverged", result.table_csv());
  }
  result.best = std::move(fitted[result.ranking.front().grid_index]);
  return result;
}

}  // namespace dagcausal
