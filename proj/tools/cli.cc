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

#include "cli.h"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "dagcausal/dataset.h"
#include "dagcausal/errors.h"
#include "dagcausal/metrics.h"
#include "dagcausal/pipeline.h"
#include "dagcausal/rng.h"
#include "dagcausal/selection.h"
#include "dagcausal/simulate.h"

namespace dagcausal::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- files

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

fs::path resolve_path(const CommandContext& ctx, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : ctx.base_dir / path;
}

// A config entry that is either inline JSON or a path to a JSON file.
json inline_or_file(const CommandContext& ctx, const json& entry) {
  if (entry.is_string()) return read_json_file(resolve_path(ctx, entry.get<std::string>()));
  return entry;
}

// --------------------------------------------------------------- config

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) { return mix64(seed ^ mix64(salt)); }

// Fills every default so reports record exactly what ran.
json resolve_config(const CommandContext& ctx) {
  json c = ctx.config.is_object() ? ctx.config : json::object();
  if (ctx.seed) c["seed"] = *ctx.seed;
  const std::uint64_t seed = c.value("seed", std::uint64_t{0});
  c["seed"] = seed;
  c["method"] = c.value("method", std::string("gformula"));
  (void)parse_estimator_method(c["method"].get<std::string>());

  auto resolve_model = [&](const char* key, const json& fallback) {
    json m = c.contains(key) ? c[key] : fallback;
    if (!m.contains("seed")) m["seed"] = seed;
    c[key] = ModelConfig::from_json(m).to_json();
  };
  auto resolve_train = [&](const char* key, const json& fallback) {
    json t = c.contains(key) ? c[key] : fallback;
    if (!t.contains("seed")) t["seed"] = seed;
    c[key] = TrainConfig::from_json(t).to_json();
  };
  resolve_model("model", json::object());
  resolve_train("train", json::object());
  if (c["method"] == "aipw-separate") {
    resolve_model("propensity_model", c["model"]);
    resolve_train("propensity_train", c["train"]);
  }
  c["propensity_clamp"] = c.value("propensity_clamp", kDefaultPropensityClamp);

  json split = c.value("split", json::object());
  split["seed"] = split.value("seed", seed);
  split["validation_fraction"] = split.value("validation_fraction", 0.3);
  const double vf = split["validation_fraction"].get<double>();
  if (!(vf > 0.0 && vf < 1.0)) throw ConfigError("split.validation_fraction must lie in (0, 1)");
  c["split"] = split;
  return c;
}

FitSpec fit_spec_from(const json& c) {
  FitSpec s;
  s.method = parse_estimator_method(c.at("method").get<std::string>());
  s.model = ModelConfig::from_json(c.at("model"));
  s.train = TrainConfig::from_json(c.at("train"));
  if (c.contains("propensity_model")) s.propensity_model = ModelConfig::from_json(c["propensity_model"]);
  if (c.contains("propensity_train")) s.propensity_train = TrainConfig::from_json(c["propensity_train"]);
  s.propensity_clamp = c.at("propensity_clamp").get<double>();
  if (c.contains("kernel_bandwidth") && !c["kernel_bandwidth"].is_null()) {
    s.kernel_bandwidth = c["kernel_bandwidth"].get<double>();
  }
  return s;
}

// Replicate r trains from seeds offset by r.
FitSpec replicate_spec(FitSpec s, std::size_t r) {
  s.model.seed += r;
  s.train.seed += r;
  if (s.propensity_model) s.propensity_model->seed += r;
  if (s.propensity_train) s.propensity_train->seed += r;
  return s;
}

// ----------------------------------------------------------------- data

struct Simulated {
  TabularDataset data;
  CausalDag dag;
  json sidecar;
  std::string simulator;
  std::string version;
};

Simulated simulate_from(const json& sim, std::uint64_t seed) {
  const std::string name = sim.value("simulator", std::string());
  const std::size_t n = sim.value("n", std::size_t{1000});
  if (n == 0) throw ConfigError("simulator sample size must be positive");
  if (name == "linear-scm") {
    const LinearScmSpec spec = LinearScmSpec::from_json(sim.value("spec", json::object()));
    Simulated s{simulate_linear_scm(n, spec, seed), linear_scm_dag(spec), json::object(), name,
                std::string(kLinearScmVersion)};
    const GroundTruth& t = *s.data.ground_truth();
    s.sidecar = {{"true_ate", t.true_ate ? json(*t.true_ate) : json(nullptr)},
                 {"cate", t.cate},
                 {"propensity", t.propensity},
                 {"mu0", t.mu0},
                 {"mu1", t.mu1},
                 {"spec", spec.to_json()}};
    return s;
  }
  if (name == "demand") {
    const DemandSample sample = simulate_demand(n, seed);
    Simulated s{demand_dataset(sample), demand_dag(), json::object(), name,
                std::string(kDemandScmVersion)};
    std::vector<double> truth;
    for (double a : demand_price_grid()) truth.push_back(demand_true_potential_outcome(a));
    s.sidecar = {{"U", sample.u},
                 {"price_grid", demand_price_grid()},
                 {"true_potential_outcomes", truth}};
    return s;
  }
  throw ConfigError("unknown simulator '" + name + "' (expected linear-scm or demand)");
}

struct LoadedData {
  TabularDataset data;
  CausalDag dag;
  std::optional<std::string> simulator;
};

LoadedData load_data(const CommandContext& ctx, const json& c) {
  if (!c.contains("data")) throw ConfigError("config has no 'data' section");
  const json& d = c["data"];
  std::optional<CausalDag> dag;
  if (c.contains("dag")) dag = CausalDag::from_json(inline_or_file(ctx, c["dag"]));
  if (d.contains("simulate")) {
    const std::uint64_t seed = d.value("seed", c.at("seed").get<std::uint64_t>());
    Simulated s = simulate_from(d["simulate"], seed);
    return {std::move(s.data), dag ? *dag : std::move(s.dag), s.simulator};
  }
  if (!d.contains("csv") || !d.contains("schema")) {
    throw ConfigError("data needs either 'simulate' or both 'csv' and 'schema'");
  }
  if (!dag) throw ConfigError("CSV data needs a 'dag' entry");
  const Schema schema = Schema::from_json(inline_or_file(ctx, d["schema"]));
  TabularDataset data = load_csv(resolve_path(ctx, d["csv"].get<std::string>()).string(), schema);
  return {std::move(data), std::move(*dag), std::nullopt};
}

std::pair<TabularDataset, TabularDataset> split_of(const TabularDataset& data, const json& c) {
  const json& s = c.at("split");
  return split_train_validation(data, 1.0 - s.at("validation_fraction").get<double>(),
                                s.at("seed").get<std::uint64_t>());
}

// --------------------------------------------------------------- models

json fitted_to_json(const FittedEstimator& fe) {
  json models = json::array();
  for (const auto& m : fe.models) models.push_back(m.to_json());
  json logs = json::array();
  for (const auto& l : fe.logs) logs.push_back(l.to_json());
  return {{"method", estimator_method_name(fe.method)},
          {"propensity_clamp", fe.propensity_clamp},
          {"models", models},
          {"logs", logs}};
}

FittedEstimator fitted_from_json(const json& j) {
  try {
    FittedEstimator fe{parse_estimator_method(j.at("method").get<std::string>()), {}, {},
                       j.value("propensity_clamp", kDefaultPropensityClamp)};
    for (const auto& m : j.at("models")) fe.models.push_back(DagTransformer::from_json(m));
    const std::size_t expected = fe.method == EstimatorMethod::kAipwSeparate ? 2 : 1;
    if (fe.models.size() != expected) {
      throw ConfigError("model file for " + j["method"].get<std::string>() + " must hold " +
                        std::to_string(expected) + " model(s)");
    }
    return fe;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

std::vector<double> grid_for(const json& c, const TabularDataset& data, const CausalDag& dag) {
  if (c.contains("a_grid")) return c["a_grid"].get<std::vector<double>>();
  const auto a = dag.treatment();
  if (a && data.require_node(dag.node(*a).name).kind == ColumnKind::kBinary) return {0.0, 1.0};
  return demand_price_grid();
}

// Runs fn(0..n-1) on up to `jobs` threads; results are written by index so
// the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Re-raises with the replicate and config hash prepended, keeping the exit code.
[[noreturn]] void rethrow_with_context(std::size_t replicate, const std::string& hash) {
  const std::string where = "replicate " + std::to_string(replicate) + " (config " + hash + "): ";
  // Same error class, so callers and exit codes see the original kind.
  try {
    throw;
  } catch (const DivergedError& e) {
    throw DivergedError(e.epoch(), e.batch(), where);
  } catch (const InsufficientDataError& e) {
    throw InsufficientDataError(where + e.what());
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const DegenerateReferenceError& e) {
    throw DegenerateReferenceError(where + e.what());
  } catch (const ContractError& e) {
    throw ContractError(where + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(where + e.what());
  } catch (const Error& e) {
    throw Error(where + e.what(), e.exit_code());
  } catch (const std::exception& e) {
    throw Error(where + e.what());
  }
}

std::string csv_number(double v) {
  return std::isfinite(v) ? format_double(v) : std::string("nan");
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// ------------------------------------------------------------- overrides

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

// -------------------------------------------------------------- commands

void cmd_simulate(const CommandContext& ctx) {
  json c = ctx.config.is_object() ? ctx.config : json::object();
  if (ctx.seed) c["seed"] = *ctx.seed;
  const std::uint64_t seed = c.value("seed", std::uint64_t{0});
  c["seed"] = seed;
  const json sim = c.contains("simulate") ? c["simulate"] : c;
  Simulated s = simulate_from(sim, seed);

  json sidecar = {{"simulator", s.simulator}, {"version", s.version}, {"seed", seed},
                  {"n", s.data.rows()}};
  sidecar.update(s.sidecar);
  write_file(ctx.out / "data.csv", s.data.to_csv());
  write_json(ctx.out / "schema.json", s.data.schema_json());
  write_json(ctx.out / "dag.json", s.dag.to_json());
  write_json(ctx.out / "ground_truth.json", sidecar);
  write_json(ctx.out / "manifest.json",
             {{"command", "simulate"},
              {"simulator", s.simulator},
              {"version", s.version},
              {"seed", seed},
              {"n", s.data.rows()},
              {"config", c},
              {"files", {"data.csv", "schema.json", "dag.json", "ground_truth.json"}}});
}

void cmd_train(const CommandContext& ctx) {
  const json c = resolve_config(ctx);
  const FitSpec spec = fit_spec_from(c);
  LoadedData d = load_data(ctx, c);
  check_method_roles(spec.method, d.dag);
  const auto [train_split, validation] = split_of(d.data, c);
  const FittedEstimator fe = fit_estimator(spec, d.dag, train_split);
  write_json(ctx.out / "models.json", fitted_to_json(fe));
  json logs = json::array();
  for (const auto& l : fe.logs) logs.push_back(l.to_json());
  write_json(ctx.out / "train_report.json",
             {{"command", "train"},
              {"config", c},
              {"config_hash", config_hash(c)},
              {"rows", {{"train", train_split.rows()}, {"validation", validation.rows()}}},
              {"parameters", fe.parameter_count()},
              {"logs", logs}});
}

void cmd_estimate(const CommandContext& ctx) {
  const json c = resolve_config(ctx);
  const FitSpec spec = fit_spec_from(c);
  LoadedData d = load_data(ctx, c);
  check_method_roles(spec.method, d.dag);
  FittedEstimator fe = c.contains("models")
                           ? fitted_from_json(read_json_file(resolve_path(ctx, c["models"].get<std::string>())))
                           : fit_estimator(spec, d.dag, d.data);
  EstimateReport report;
  if (is_proximal(fe.method)) {
    TabularDataset heldout = d.data;
    if (d.simulator == std::string("demand")) {
      const std::uint64_t seed = derive_seed(c.at("seed").get<std::uint64_t>(), 0x4E1D);
      heldout = demand_dataset(simulate_demand(c.value("heldout_draws", kDemandHeldoutDraws), seed));
    }
    report = run_proximal(fe, heldout, grid_for(c, d.data, d.dag));
  } else {
    report = run_estimator(fe, d.data);
  }
  json j = {{"command", "estimate"}, {"config", c}, {"config_hash", config_hash(c)},
            {"rows", d.data.rows()}, {"report", report.to_json()}};
  if (const auto& t = d.data.ground_truth(); t && t->true_ate) j["true_ate"] = *t->true_ate;
  write_json(ctx.out / "estimate.json", j);
  if (report.cate) write_file(ctx.out / "cate.csv", report.cate_csv());
}

void cmd_tune(const CommandContext& ctx) {
  json c = resolve_config(ctx);
  const FitSpec base = fit_spec_from(c);
  if (!c.contains("grid")) throw ConfigError("tune needs a 'grid' entry");
  const HyperGrid grid = HyperGrid::from_json(inline_or_file(ctx, c["grid"]), base);
  c["grid"] = grid.to_json();

  json sel = c.value("selection", json::object());
  SelectionOptions opt;
  opt.mode = parse_selection_mode(sel.value("mode", std::string("cate")));
  opt.forest = ForestConfig::from_json(sel.value("forest", json{{"seed", c["seed"]}}));
  opt.ate_replicates = sel.value("ate_replicates", opt.ate_replicates);
  opt.seed = c["seed"].get<std::uint64_t>();
  opt.jobs = ctx.jobs;
  sel["mode"] = selection_mode_name(opt.mode);
  sel["forest"] = opt.forest.to_json();
  sel["ate_replicates"] = opt.ate_replicates;
  c["selection"] = sel;

  LoadedData d = load_data(ctx, c);
  const auto [train_split, validation] = split_of(d.data, c);
  SelectionResult result;
  try {
    result = grid_search(grid, base, d.dag, train_split, validation, opt);
  } catch (const SelectionError& e) {
    write_file(ctx.out / "ranking.csv", e.table_csv());
    throw;
  }
  write_file(ctx.out / "ranking.csv", result.table_csv());
  json rows = json::array();
  for (const auto& r : result.ranking) {
    rows.push_back({{"config_hash", r.hash}, {"grid_index", r.grid_index}, {"point", r.point},
                    {"nrmse", number_or_null(r.nrmse)}, {"train_loss", number_or_null(r.train_loss)},
                    {"diverged", r.diverged}, {"parameters", r.parameters}, {"note", r.note}});
  }
  write_json(ctx.out / "best_models.json", fitted_to_json(*result.best));
  write_json(ctx.out / "tune_report.json",
             {{"command", "tune"}, {"config", c}, {"config_hash", config_hash(c)},
              {"grid_size", grid.size()}, {"ranking", rows},
              {"best", rows.front()}});
}

namespace {

void evaluate_bootstrap(const CommandContext& ctx, json& c, json& report) {
  const FitSpec base = fit_spec_from(c);
  json& ev = c["evaluate"];
  const std::size_t reps = ev.value("replicates", std::size_t{10});
  const std::string mode = ev.value("mode", std::string("ate"));
  if (mode != "ate" && mode != "cate") throw ConfigError("evaluate.mode must be ate or cate");
  ev["replicates"] = reps;
  ev["mode"] = mode;
  if (is_proximal(base.method)) throw ConfigError("bootstrap evaluation needs a binary-treatment method");
  if (mode == "cate" && base.method == EstimatorMethod::kIpw) {
    throw ConfigError("ipw produces no per-unit cate; use evaluate.mode=ate");
  }
  LoadedData d = load_data(ctx, c);
  check_method_roles(base.method, d.dag);
  std::optional<double> fixed_truth;
  if (ev.contains("true_ate")) fixed_truth = ev["true_ate"].get<double>();
  const std::string hash = config_hash(c);
  const std::uint64_t seed = c["seed"].get<std::uint64_t>();

  struct Row {
    std::uint64_t seed = 0;
    double ate = 0, truth = 0, nrmse = 0, loss = 0;
  };
  std::vector<Row> rows(reps);
  parallel_for(reps, ctx.jobs, [&](std::size_t r) {
    try {
      Row& row = rows[r];
      row.seed = derive_seed(seed, 0xB0 + r);
      const TabularDataset sample = bootstrap(d.data, row.seed);
      const FittedEstimator fe = fit_estimator(replicate_spec(base, r), d.dag, sample);
      const EstimateReport est = run_estimator(fe, sample);
      row.ate = est.ate.value();
      row.loss = fe.final_loss();
      const auto& truth = sample.ground_truth();
      if (mode == "cate") {
        if (!truth || truth->cate.empty()) throw ConfigError("CATE evaluation needs per-unit ground truth");
        row.truth = std::accumulate(truth->cate.begin(), truth->cate.end(), 0.0) /
                    static_cast<double>(truth->cate.size());
        row.nrmse = nrmse(truth->cate, *est.cate);
      } else {
        if (fixed_truth) {
          row.truth = *fixed_truth;
        } else if (truth && !truth->cate.empty()) {
          row.truth = std::accumulate(truth->cate.begin(), truth->cate.end(), 0.0) /
                      static_cast<double>(truth->cate.size());
        } else if (truth && truth->true_ate) {
          row.truth = *truth->true_ate;
        } else {
          throw ConfigError("ATE evaluation needs ground truth or evaluate.true_ate");
        }
        if (row.truth == 0.0) throw DegenerateReferenceError("true ATE is zero; normalized error undefined");
        row.nrmse = std::abs(row.ate - row.truth) / std::abs(row.truth);
      }
    } catch (...) {
      rethrow_with_context(r, hash);
    }
  });

  std::ostringstream csv;
  csv << "replicate,seed,ate,true_ate,nrmse,train_loss\n";
  json jr = json::array();
  std::vector<double> scores, ates;
  for (std::size_t r = 0; r < reps; ++r) {
    const Row& row = rows[r];
    csv << r << ',' << row.seed << ',' << csv_number(row.ate) << ',' << csv_number(row.truth) << ','
        << csv_number(row.nrmse) << ',' << csv_number(row.loss) << '\n';
    jr.push_back({{"replicate", r}, {"seed", row.seed}, {"ate", row.ate}, {"true_ate", row.truth},
                  {"nrmse", row.nrmse}, {"train_loss", number_or_null(row.loss)}});
    scores.push_back(row.nrmse);
    ates.push_back(row.ate);
  }
  const MeanSe s = mean_se(scores), a = mean_se(ates);
  report["replicates"] = jr;
  report["aggregate"] = {{"mean_nrmse", s.mean}, {"se_nrmse", s.se}, {"mean_ate", a.mean},
                         {"se_ate", a.se}, {"replicates", reps}};
  write_file(ctx.out / "replicates.csv", csv.str());
}

void evaluate_demand(const CommandContext& ctx, json& c, json& report) {
  const FitSpec base = fit_spec_from(c);
  if (!is_proximal(base.method)) throw ConfigError("demand evaluation needs proximal-u or proximal-v");
  json& ev = c["evaluate"];
  const std::size_t reps = ev.value("replicates", kDemandReplicates);
  const std::size_t n = ev.value("sample_size", kDemandSampleSizes[0]);
  const std::size_t draws = ev.value("heldout_draws", kDemandHeldoutDraws);
  if (reps == 0 || n < 2 || draws == 0) throw ConfigError("demand evaluation needs replicates, n >= 2 and heldout draws");
  ev["replicates"] = reps;
  ev["sample_size"] = n;
  ev["heldout_draws"] = draws;
  const std::string hash = config_hash(c);
  const std::uint64_t seed = c["seed"].get<std::uint64_t>();
  const std::vector<double> grid = demand_price_grid();
  std::vector<double> truth;
  for (double a : grid) truth.push_back(demand_true_potential_outcome(a));

  struct Row {
    std::uint64_t seed = 0;
    double cmse = 0, naive = 0, loss = 0;
    std::vector<double> curve;
  };
  std::vector<Row> rows(reps);
  parallel_for(reps, ctx.jobs, [&](std::size_t r) {
    try {
      Row& row = rows[r];
      row.seed = derive_seed(seed, 0xD0 + r);
      const TabularDataset sample = demand_dataset(simulate_demand(n, row.seed));
      const TabularDataset heldout = demand_dataset(simulate_demand(draws, derive_seed(row.seed, 0x4E1D)));
      const FittedEstimator fe = fit_estimator(replicate_spec(base, r), demand_dag(), sample);
      const EstimateReport est = run_proximal(fe, heldout, grid);
      for (const auto& [a, v] : est.potential_outcomes) row.curve.push_back(v);
      row.cmse = c_mse(row.curve, truth);
      const auto& y = sample.require_node("Y").values;
      const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
      row.naive = c_mse(std::vector<double>(grid.size(), ybar), truth);
      row.loss = fe.final_loss();
    } catch (...) {
      rethrow_with_context(r, hash);
    }
  });

  std::ostringstream csv;
  csv << "replicate,seed,c_mse,naive_c_mse,train_loss\n";
  json jr = json::array();
  std::vector<double> cm, nv;
  for (std::size_t r = 0; r < reps; ++r) {
    const Row& row = rows[r];
    csv << r << ',' << row.seed << ',' << csv_number(row.cmse) << ',' << csv_number(row.naive) << ','
        << csv_number(row.loss) << '\n';
    jr.push_back({{"replicate", r}, {"seed", row.seed}, {"c_mse", row.cmse},
                  {"naive_c_mse", row.naive}, {"train_loss", number_or_null(row.loss)},
                  {"curve", row.curve}});
    cm.push_back(row.cmse);
    nv.push_back(row.naive);
  }
  const MedianIqr m = median_iqr(cm), b = median_iqr(nv);
  report["price_grid"] = grid;
  report["true_curve"] = truth;
  report["replicates"] = jr;
  report["aggregate"] = {
      {"median_c_mse", m.median}, {"iqr_c_mse", m.iqr()}, {"q1_c_mse", m.q1}, {"q3_c_mse", m.q3},
      {"naive_median_c_mse", b.median}, {"naive_iqr_c_mse", b.iqr()}, {"replicates", reps}};
  write_file(ctx.out / "replicates.csv", csv.str());
}

}  // namespace

void cmd_evaluate(const CommandContext& ctx) {
  json c = resolve_config(ctx);
  if (!c.contains("evaluate")) c["evaluate"] = json::object();
  const std::string protocol = c["evaluate"].value("protocol", std::string("bootstrap"));
  c["evaluate"]["protocol"] = protocol;
  json report = {{"command", "evaluate"}};
  if (protocol == "bootstrap") {
    evaluate_bootstrap(ctx, c, report);
  } else if (protocol == "demand") {
    evaluate_demand(ctx, c, report);
  } else {
    throw ConfigError("unknown evaluate.protocol '" + protocol + "' (expected bootstrap or demand)");
  }
  report["config"] = c;
  report["config_hash"] = config_hash(c);
  write_json(ctx.out / "evaluate.json", report);
}

// ------------------------------------------------------------------ main

int run(int argc, char** argv) {
  CLI::App app{"DAG-aware transformer causal effect estimation"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::size_t jobs = 1;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--set", overrides, "key=value override (dotted keys)");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--jobs", jobs, "concurrent replicates or grid points")->check(CLI::PositiveNumber);
  };
  struct Sub {
    const char* name;
    const char* help;
    void (*fn)(const CommandContext&);
  };
  const Sub subs[] = {
      {"simulate", "write a simulated dataset with its ground truth", cmd_simulate},
      {"train", "train the models of a method on the training split", cmd_train},
      {"estimate", "estimate ATE/CATE or potential outcomes", cmd_estimate},
      {"tune", "grid search scored against a plug-in estimator", cmd_tune},
      {"evaluate", "replicate loop with aggregate error statistics", cmd_evaluate},
  };
  std::vector<CLI::App*> apps;
  for (const auto& s : subs) {
    apps.push_back(app.add_subcommand(s.name, s.help));
    common(apps.back());
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    CommandContext ctx;
    if (!config_path.empty()) {
      ctx.config = read_json_file(config_path);
      ctx.base_dir = fs::path(config_path).parent_path();
      if (ctx.base_dir.empty()) ctx.base_dir = ".";
    }
    for (const auto& o : overrides) apply_override(ctx.config, o);
    ctx.seed = seed;
    ctx.out = out;
    ctx.jobs = jobs;
    for (std::size_t i = 0; i < apps.size(); ++i) {
      if (apps[i]->parsed()) subs[i].fn(ctx);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "dagcausal: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "dagcausal: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dagcausal::cli
