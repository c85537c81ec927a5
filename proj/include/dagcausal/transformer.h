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

#ifndef DAGCAUSAL_TRANSFORMER_H_
#define DAGCAUSAL_TRANSFORMER_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dagcausal/autodiff.h"
#include "dagcausal/causal_dag.h"
#include "dagcausal/dataset.h"
#include "json.hpp"

namespace dagcausal {

struct ModelConfig {
  std::size_t embedding_dim = 16;
  std::size_t num_heads = 2;
  std::size_t num_encoder_layers = 1;
  std::size_t feedforward_dim = 32;
  std::size_t mlp_width = 32;
  std::size_t mlp_depth = 2;
  double dropout_rate = 0.0;
  double alpha = 0.02;
  std::uint64_t seed = 0;
  // Baseline mode: the encoder is skipped and heads see only raw inputs.
  bool encoder_bypass = false;

  // Throws ConfigError on non-positive sizes, heads not dividing the
  // embedding width, dropout outside [0, 1) or negative alpha.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Per-column affine standardization; binary columns pass through.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
  bool fitted() const { return !mean.empty(); }
};

// Post-softmax attention weights, one tensor [N x heads x D x D] per
// (prediction head, encoder layer).
struct AttentionTrace {
  std::vector<std::vector<Tensor>> weights;
};

// Transformer encoder whose attention is restricted to DAG parents, followed
// by one MLP per predicted node.
//
// Token j is node j's value embedding plus its identity embedding. The
// encoder pass serving the head for node i embeds values only for the
// observed parents of i; every other token carries its identity embedding
// alone. The head reads node i's encoder output H_i and feeds
// [alpha * H_i, raw parent values] to its MLP. A head output therefore
// depends on the data only through the values of its node's parents.
class DagTransformer {
 public:
  // `kinds[k]` is the column kind of input node k of the layout.
  DagTransformer(ModelConfig config, CausalDag dag, Method method,
                 std::vector<ColumnKind> kinds);

  // Kinds are taken from the columns bound to the layout's input nodes.
  static DagTransformer for_dataset(ModelConfig config, const CausalDag& dag,
                                    Method method, const TabularDataset& data);

  // Parameters are shared handles, so copies would alias; use clone().
  DagTransformer(const DagTransformer&) = delete;
  DagTransformer& operator=(const DagTransformer&) = delete;
  DagTransformer(DagTransformer&&) = default;
  DagTransformer& operator=(DagTransformer&&) = default;
  DagTransformer clone() const { return from_json(to_json()); }

  const ModelConfig& config() const { return config_; }
  const CausalDag& dag() const { return dag_; }
  const ModelLayout& layout() const { return layout_; }
  // DAG induced on the layout inputs; this is what the mask is built from.
  const CausalDag& input_dag() const { return input_dag_; }
  const AttentionMask& mask() const { return mask_; }
  const std::vector<ColumnKind>& kinds() const { return kinds_; }
  std::size_t num_inputs() const { return layout_.inputs.size(); }
  std::size_t num_heads() const { return layout_.heads.size(); }
  // Position of DAG node `dag_index` within the layout inputs.
  std::size_t input_position(std::size_t dag_index) const;
  // Input positions of the raw parents feeding head h.
  const std::vector<std::size_t>& head_parents(std::size_t h) const {
    return head_parents_.at(h);
  }
  bool head_is_binary(std::size_t h) const;
  std::size_t head_for_node(std::size_t dag_index) const;

  const std::vector<nn::Var>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  const Standardizer& standardizer() const { return standardizer_; }
  void set_standardizer(Standardizer s);
  // Fits mean/sd of every continuous input column on `batch`.
  void fit_standardizer(const Tensor& batch);

  // N x num_inputs matrix of the columns bound to the layout inputs.
  Tensor design_matrix(const TabularDataset& data) const;

  // Head outputs in model space: probabilities for binary heads, the
  // standardized target for continuous ones. Each output is N x 1.
  std::vector<nn::Var> forward(nn::Tape& tape, const Tensor& batch, bool train,
                               Rng* rng = nullptr,
                               AttentionTrace* trace = nullptr) const;

  // Evaluation-mode predictions in data units, one vector per head.
  std::vector<std::vector<double>> predict(const Tensor& batch) const;
  // As predict, on a copy of `batch` whose treatment column is set to `a`.
  std::vector<std::vector<double>> counterfactual_predict(const Tensor& batch,
                                                          double a) const;

  // Maps a target column to model space for the given head.
  std::vector<double> standardize_target(std::size_t h,
                                         const std::vector<double>& y) const;

  nlohmann::json to_json() const;
  static DagTransformer from_json(const nlohmann::json& j);

 private:
  struct EncoderLayer {
    nn::Var ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    nn::Var ln2_g, ln2_b, w1, b1, w2, b2;
  };
  struct Head {
    std::vector<nn::Var> weights;
    std::vector<nn::Var> biases;
  };

  void build_parameters();
  nn::Var add_param(const std::string& name, Tensor value);
  void validate_batch(const Tensor& batch) const;
  Tensor standardized(const Tensor& batch) const;

  ModelConfig config_;
  CausalDag dag_;
  ModelLayout layout_;
  CausalDag input_dag_;
  AttentionMask mask_;
  std::vector<double> additive_mask_;
  std::vector<ColumnKind> kinds_;
  std::vector<std::vector<std::size_t>> head_parents_;
  Standardizer standardizer_;

  std::vector<nn::Var> params_;
  std::vector<std::string> param_names_;
  // Continuous nodes: {w [1 x E], b [E]}, embedding x * w + b. Binary
  // nodes: {table [2 x E]} indexed by the value.
  std::vector<std::vector<nn::Var>> value_embeddings_;
  nn::Var identity_embedding_;
  std::vector<EncoderLayer> layers_;
  nn::Var final_ln_g_, final_ln_b_;
  std::vector<Head> heads_;
};

}  // namespace dagcausal

#endif  // DAGCAUSAL_TRANSFORMER_H_
