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

#include "dagcausal/transformer.h"

#include <algorithm>
#include <cmath>

#include "dagcausal/errors.h"

namespace dagcausal {

namespace {

constexpr const char* kSnapshotVersion = "dagcausal-model/1";

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

void ModelConfig::validate() const {
  if (embedding_dim == 0 || num_heads == 0 || num_encoder_layers == 0 ||
      feedforward_dim == 0 || mlp_width == 0 || mlp_depth == 0) {
    throw ConfigError("model dimensions must all be positive");
  }
  if (embedding_dim % num_heads != 0) {
    throw ConfigError("embedding_dim " + std::to_string(embedding_dim) +
                      " is not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("alpha must be a finite nonnegative number");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"embedding_dim", embedding_dim},
          {"num_heads", num_heads},
          {"num_encoder_layers", num_encoder_layers},
          {"feedforward_dim", feedforward_dim},
          {"mlp_width", mlp_width},
          {"mlp_depth", mlp_depth},
          {"dropout_rate", dropout_rate},
          {"alpha", alpha},
          {"seed", seed},
          {"encoder_bypass", encoder_bypass}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.num_heads = j.value("num_heads", c.num_heads);
    c.num_encoder_layers = j.value("num_encoder_layers", c.num_encoder_layers);
    c.feedforward_dim = j.value("feedforward_dim", c.feedforward_dim);
    c.mlp_width = j.value("mlp_width", c.mlp_width);
    c.mlp_depth = j.value("mlp_depth", c.mlp_depth);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    c.alpha = j.value("alpha", c.alpha);
    c.seed = j.value("seed", c.seed);
    c.encoder_bypass = j.value("encoder_bypass", c.encoder_bypass);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

DagTransformer::DagTransformer(ModelConfig config, CausalDag dag, Method method,
                               std::vector<ColumnKind> kinds)
    : config_(config),
      dag_(std::move(dag)),
      layout_(input_nodes_for(method, dag_)),
      input_dag_(dag_.induced(layout_.inputs)),
      mask_(build_mask(build_adjacency(input_dag_))),
      additive_mask_(mask_.additive()),
      kinds_(std::move(kinds)) {
  config_.validate();
  if (kinds_.size() != layout_.inputs.size()) {
    throw DimensionError("model has " + std::to_string(layout_.inputs.size()) +
                         " input nodes but " + std::to_string(kinds_.size()) +
                         " column kinds were given");
  }
  for (std::size_t head : layout_.heads) {
    std::vector<std::size_t> parents;
    for (std::size_t p : dag_.parents(head)) {
      auto it = std::find(layout_.inputs.begin(), layout_.inputs.end(), p);
      if (it != layout_.inputs.end())
        parents.push_back(static_cast<std::size_t>(it - layout_.inputs.begin()));
    }
    std::sort(parents.begin(), parents.end());
    head_parents_.push_back(std::move(parents));
  }
  if (method == Method::kIpw || method == Method::kAipw) {
    const std::size_t a = input_position(*dag_.treatment());
    if (kinds_[a] != ColumnKind::kBinary) {
      throw ConfigError(std::string(method_name(method)) +
                        " requires a binary treatment column");
    }
  }
  build_parameters();
}

DagTransformer DagTransformer::for_dataset(ModelConfig config, const CausalDag& dag,
                                           Method method,
                                           const TabularDataset& data) {
  const ModelLayout layout = input_nodes_for(method, dag);
  std::vector<ColumnKind> kinds;
  for (std::size_t i : layout.inputs)
    kinds.push_back(data.require_node(dag.node(i).name).kind);
  return DagTransformer(config, dag, method, std::move(kinds));
}

std::size_t DagTransformer::input_position(std::size_t dag_index) const {
  auto it = std::find(layout_.inputs.begin(), layout_.inputs.end(), dag_index);
  if (it == layout_.inputs.end()) {
    throw ConfigError("DAG node '" + dag_.node(dag_index).name +
                      "' is not a model input");
  }
  return static_cast<std::size_t>(it - layout_.inputs.begin());
}

bool DagTransformer::head_is_binary(std::size_t h) const {
  return kinds_[input_position(layout_.heads.at(h))] == ColumnKind::kBinary;
}

std::size_t DagTransformer::head_for_node(std::size_t dag_index) const {
  for (std::size_t h = 0; h < layout_.heads.size(); ++h)
    if (layout_.heads[h] == dag_index) return h;
  throw ConfigError("model has no prediction head for node '" +
                    dag_.node(dag_index).name + "'");
}

nn::Var DagTransformer::add_param(const std::string& name, Tensor value) {
  nn::Var v = nn::parameter(std::move(value), name);
  params_.push_back(v);
  param_names_.push_back(name);
  return v;
}

void DagTransformer::build_parameters() {
  Rng rng(config_.seed, /*stream=*/0x1417);
  const std::size_t e = config_.embedding_dim, d = num_inputs();
  const std::size_t f = config_.feedforward_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(e));

  for (std::size_t k = 0; k < d; ++k) {
    const std::string base = "embedding." + input_dag_.node(k).name;
    if (kinds_[k] == ColumnKind::kBinary) {
      value_embeddings_.push_back({add_param(base + ".table",
                                             uniform_tensor({2, e}, bound, rng))});
    } else {
      value_embeddings_.push_back(
          {add_param(base + ".w", uniform_tensor({1, e}, bound, rng)),
           add_param(base + ".b", Tensor({e}, 0.0))});
    }
  }
  identity_embedding_ = add_param("embedding.identity", uniform_tensor({d, e}, bound, rng));

  if (!config_.encoder_bypass) {
    for (std::size_t l = 0; l < config_.num_encoder_layers; ++l) {
      const std::string p = "encoder." + std::to_string(l) + ".";
      EncoderLayer layer;
      layer.ln1_g = add_param(p + "ln1.gamma", Tensor({e}, 1.0));
      layer.ln1_b = add_param(p + "ln1.beta", Tensor({e}, 0.0));
      layer.wq = add_param(p + "attn.wq", uniform_tensor({e, e}, bound, rng));
      layer.bq = add_param(p + "attn.bq", Tensor({e}, 0.0));
      layer.wk = add_param(p + "attn.wk", uniform_tensor({e, e}, bound, rng));
      layer.bk = add_param(p + "attn.bk", Tensor({e}, 0.0));
      layer.wv = add_param(p + "attn.wv", uniform_tensor({e, e}, bound, rng));
      layer.bv = add_param(p + "attn.bv", Tensor({e}, 0.0));
      layer.wo = add_param(p + "attn.wo", uniform_tensor({e, e}, bound, rng));
      layer.bo = add_param(p + "attn.bo", Tensor({e}, 0.0));
      layer.ln2_g = add_param(p + "ln2.gamma", Tensor({e}, 1.0));
      layer.ln2_b = add_param(p + "ln2.beta", Tensor({e}, 0.0));
      layer.w1 = add_param(p + "ffn.w1", uniform_tensor({e, f}, bound, rng));
      layer.b1 = add_param(p + "ffn.b1", Tensor({f}, 0.0));
      layer.w2 = add_param(p + "ffn.w2",
                           uniform_tensor({f, e}, 1.0 / std::sqrt(static_cast<double>(f)), rng));
      layer.b2 = add_param(p + "ffn.b2", Tensor({e}, 0.0));
      layers_.push_back(std::move(layer));
    }
    final_ln_g_ = add_param("encoder.final_ln.gamma", Tensor({e}, 1.0));
    final_ln_b_ = add_param("encoder.final_ln.beta", Tensor({e}, 0.0));
  }

  for (std::size_t h = 0; h < num_heads(); ++h) {
    const std::string p = "head." + dag_.node(layout_.heads[h]).name + ".";
    Head head;
    std::size_t in = e + head_parents_[h].size();
    for (std::size_t l = 0; l <= config_.mlp_depth; ++l) {
      const std::size_t out = l == config_.mlp_depth ? 1 : config_.mlp_width;
      const double b = 1.0 / std::sqrt(static_cast<double>(in));
      head.weights.push_back(add_param(p + std::to_string(l) + ".w",
                                       uniform_tensor({in, out}, b, rng)));
      head.biases.push_back(add_param(p + std::to_string(l) + ".b", Tensor({out}, 0.0)));
      in = out;
    }
    heads_.push_back(std::move(head));
  }
}

std::size_t DagTransformer::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void DagTransformer::set_standardizer(Standardizer s) {
  if (s.mean.size() != num_inputs() || s.scale.size() != num_inputs()) {
    throw DimensionError("standardizer does not match the model inputs");
  }
  standardizer_ = std::move(s);
}

void DagTransformer::fit_standardizer(const Tensor& batch) {
  validate_batch(batch);
  const std::size_t n = batch.rows(), d = num_inputs();
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  for (std::size_t k = 0; k < d; ++k) {
    if (kinds_[k] == ColumnKind::kBinary) continue;
    double mu = 0.0;
    for (std::size_t r = 0; r < n; ++r) mu += batch.at(r, k);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dlt = batch.at(r, k) - mu;
      var += dlt * dlt;
    }
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    s.mean[k] = mu;
    s.scale[k] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  standardizer_ = std::move(s);
}

Tensor DagTransformer::design_matrix(const TabularDataset& data) const {
  const std::size_t n = data.rows(), d = num_inputs();
  if (n == 0) throw DataError("dataset has no rows");
  Tensor m({n, d});
  for (std::size_t k = 0; k < d; ++k) {
    const Column& c = data.require_node(input_dag_.node(k).name);
    if (c.kind != kinds_[k]) {
      throw DataError("column '" + c.name + "' kind does not match the model");
    }
    for (std::size_t r = 0; r < n; ++r) m.at(r, k) = c.values[r];
  }
  return m;
}

void DagTransformer::validate_batch(const Tensor& batch) const {
  if (batch.rank() != 2 || batch.cols() != num_inputs()) {
    throw DimensionError("batch of shape " + shape_string(batch.shape()) +
                         " does not match the " + std::to_string(num_inputs()) +
                         " model input nodes");
  }
  for (std::size_t k = 0; k < num_inputs(); ++k) {
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      const double v = batch.at(r, k);
      if (!std::isfinite(v)) {
        throw DataError("non-finite value in column for node '" +
                        input_dag_.node(k).name + "'");
      }
      if (kinds_[k] == ColumnKind::kBinary && v != 0.0 && v != 1.0) {
        throw DataError("binary node '" + input_dag_.node(k).name +
                        "' has value " + format_double(v) + " in row " +
                        std::to_string(r + 1));
      }
    }
  }
}

Tensor DagTransformer::standardized(const Tensor& batch) const {
  Tensor out = batch;
  if (!standardizer_.fitted()) return out;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t k = 0; k < out.cols(); ++k)
      out.at(r, k) = (out.at(r, k) - standardizer_.mean[k]) / standardizer_.scale[k];
  return out;
}

std::vector<double> DagTransformer::standardize_target(std::size_t h,
                                                       const std::vector<double>& y) const {
  if (head_is_binary(h) || !standardizer_.fitted()) return y;
  const std::size_t k = input_position(layout_.heads[h]);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = (y[i] - standardizer_.mean[k]) / standardizer_.scale[k];
  return out;
}

std::vector<nn::Var> DagTransformer::forward(nn::Tape& tape, const Tensor& batch,
                                             bool train, Rng* rng,
                                             AttentionTrace* trace) const {
  validate_batch(batch);
  const bool stochastic = train && config_.dropout_rate > 0.0;
  if (stochastic && rng == nullptr) {
    throw ContractError("training forward with dropout needs an Rng stream");
  }
  Rng unused(0);
  Rng& drop_rng = rng != nullptr ? *rng : unused;
  const Tensor xs = standardized(batch);
  const std::size_t n = xs.rows(), d = num_inputs(), e = config_.embedding_dim;
  const double rate = config_.dropout_rate;

  std::vector<nn::Var> columns(d);
  for (std::size_t k = 0; k < d; ++k) {
    Tensor col({n, 1});
    for (std::size_t r = 0; r < n; ++r) col[r] = xs.at(r, k);
    columns[k] = nn::constant(std::move(col));
  }
  std::vector<nn::Var> embedded(d);
  auto embed = [&](std::size_t k) -> nn::Var {
    if (embedded[k]) return embedded[k];
    const auto& p = value_embeddings_[k];
    if (kinds_[k] == ColumnKind::kBinary) {
      std::vector<std::size_t> idx(n);
      for (std::size_t r = 0; r < n; ++r) idx[r] = batch.at(r, k) == 1.0 ? 1 : 0;
      embedded[k] = nn::gather_rows(tape, p[0], idx);
    } else {
      embedded[k] = nn::linear(tape, columns[k], p[0], p[1]);
    }
    return embedded[k];
  };
  const nn::Var zeros = nn::constant(Tensor({n, e}, 0.0));
  if (trace != nullptr) trace->weights.assign(num_heads(), {});

  std::vector<nn::Var> outputs;
  for (std::size_t h = 0; h < num_heads(); ++h) {
    const auto& parents = head_parents_[h];
    const std::size_t self = input_position(layout_.heads[h]);
    nn::Var encoded = zeros;
    if (!config_.encoder_bypass) {
      std::vector<nn::Var> tokens(d, zeros);
      for (std::size_t k : parents) tokens[k] = embed(k);
      nn::Var x = nn::add_tiled(tape, nn::interleave_rows(tape, tokens),
                                identity_embedding_);
      const double score_scale = 1.0 / std::sqrt(static_cast<double>(e));
      for (const auto& layer : layers_) {
        nn::Var h1 = nn::layer_norm(tape, x, layer.ln1_g, layer.ln1_b);
        nn::Var q = nn::linear(tape, h1, layer.wq, layer.bq);
        nn::Var k = nn::linear(tape, h1, layer.wk, layer.bk);
        nn::Var v = nn::linear(tape, h1, layer.wv, layer.bv);
        Tensor weights;
        nn::Var att = nn::masked_attention(tape, q, k, v, additive_mask_, d,
                                           config_.num_heads, score_scale,
                                           trace != nullptr ? &weights : nullptr);
        if (trace != nullptr) trace->weights[h].push_back(std::move(weights));
        nn::Var o = nn::linear(tape, att, layer.wo, layer.bo);
        x = nn::add(tape, x, nn::dropout(tape, o, rate, train, drop_rng));
        nn::Var h2 = nn::layer_norm(tape, x, layer.ln2_g, layer.ln2_b);
        nn::Var ff = nn::linear(tape, nn::relu(tape, nn::linear(tape, h2, layer.w1, layer.b1)),
                                layer.w2, layer.b2);
        x = nn::add(tape, x, nn::dropout(tape, ff, rate, train, drop_rng));
      }
      x = nn::layer_norm(tape, x, final_ln_g_, final_ln_b_);
      std::vector<std::size_t> rows(n);
      for (std::size_t r = 0; r < n; ++r) rows[r] = r * d + self;
      encoded = nn::scale(tape, nn::gather_rows(tape, x, rows), config_.alpha);
    }
    nn::Var z = encoded;
    if (!parents.empty()) {
      std::vector<nn::Var> parts{encoded};
      for (std::size_t k : parents) parts.push_back(columns[k]);
      z = nn::concat_cols(tape, parts);
    }
    const Head& head = heads_[h];
    for (std::size_t l = 0; l < head.weights.size(); ++l) {
      z = nn::linear(tape, z, head.weights[l], head.biases[l]);
      if (l + 1 < head.weights.size()) {
        z = nn::dropout(tape, nn::relu(tape, z), rate, train, drop_rng);
      }
    }
    if (head_is_binary(h)) z = nn::sigmoid(tape, z);
    outputs.push_back(z);
  }
  return outputs;
}

std::vector<std::vector<double>> DagTransformer::predict(const Tensor& batch) const {
  nn::Tape tape;
  const auto outs = forward(tape, batch, /*train=*/false);
  std::vector<std::vector<double>> preds;
  for (std::size_t h = 0; h < outs.size(); ++h) {
    std::vector<double> p(outs[h]->value.values());
    if (!head_is_binary(h) && standardizer_.fitted()) {
      const std::size_t k = input_position(layout_.heads[h]);
      for (double& v : p) v = v * standardizer_.scale[k] + standardizer_.mean[k];
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

std::vector<std::vector<double>> DagTransformer::counterfactual_predict(
    const Tensor& batch, double a) const {
  const auto t = dag_.treatment();
  if (!t) throw ConfigError("model DAG has no treatment node");
  const std::size_t k = input_position(*t);
  validate_batch(batch);
  Tensor copy = batch;
  for (std::size_t r = 0; r < copy.rows(); ++r) copy.at(r, k) = a;
  return predict(copy);
}

nlohmann::json DagTransformer::to_json() const {
  nlohmann::json j;
  j["version"] = kSnapshotVersion;
  j["config"] = config_.to_json();
  j["method"] = method_name(layout_.method);
  j["dag"] = dag_.to_json();
  j["node_order"] = nlohmann::json::array();
  for (std::size_t k = 0; k < num_inputs(); ++k)
    j["node_order"].push_back(input_dag_.node(k).name);
  j["kinds"] = nlohmann::json::array();
  for (auto kd : kinds_) j["kinds"].push_back(kind_name(kd));
  if (standardizer_.fitted()) {
    j["standardizer"] = {{"mean", standardizer_.mean}, {"scale", standardizer_.scale}};
  }
  j["parameters"] = nlohmann::json::array();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    j["parameters"].push_back({{"name", param_names_[i]},
                               {"shape", params_[i]->value.shape()},
                               {"data", params_[i]->value.values()}});
  }
  return j;
}

DagTransformer DagTransformer::from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<std::string>() != kSnapshotVersion) {
      throw ConfigError("unsupported model snapshot version '" +
                        j.at("version").get<std::string>() + "'");
    }
    const std::string m = j.at("method").get<std::string>();
    Method method;
    if (m == "gformula") method = Method::kGFormula;
    else if (m == "ipw") method = Method::kIpw;
    else if (m == "aipw") method = Method::kAipw;
    else if (m == "proximal") method = Method::kProximal;
    else throw ConfigError("unknown method '" + m + "' in snapshot");
    std::vector<ColumnKind> kinds;
    for (const auto& k : j.at("kinds")) kinds.push_back(parse_kind(k.get<std::string>()));
    DagTransformer model(ModelConfig::from_json(j.at("config")),
                         CausalDag::from_json(j.at("dag")), method, std::move(kinds));
    std::vector<std::string> order;
    for (std::size_t k = 0; k < model.num_inputs(); ++k)
      order.push_back(model.input_dag_.node(k).name);
    if (j.at("node_order").get<std::vector<std::string>>() != order) {
      throw ConfigError("snapshot node order does not match its DAG");
    }
    if (j.contains("standardizer")) {
      model.set_standardizer({j["standardizer"].at("mean").get<std::vector<double>>(),
                              j["standardizer"].at("scale").get<std::vector<double>>()});
    }
    const auto& params = j.at("parameters");
    if (params.size() != model.params_.size()) {
      throw ConfigError("snapshot parameter count does not match the architecture");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].at("name").get<std::string>() != model.param_names_[i]) {
        throw ConfigError("snapshot parameter '" +
                          params[i].at("name").get<std::string>() +
                          "' out of order");
      }
      Tensor value(params[i].at("shape").get<Shape>(),
                   params[i].at("data").get<std::vector<double>>());
      if (value.shape() != model.params_[i]->value.shape()) {
        throw ConfigError("snapshot parameter '" + model.param_names_[i] +
                          "' has the wrong shape");
      }
      model.params_[i]->value = std::move(value);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model snapshot: ") + e.what());
  }
}

}  // namespace dagcausal
