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

#include "dagcausal/train.h"

#include <cmath>
#include <numeric>

#include "dagcausal/errors.h"

namespace dagcausal {

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"l2_penalty", adam.l2_penalty},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.adam.l2_penalty = j.value("l2_penalty", c.adam.l2_penalty);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed optimizer config: ") + e.what());
  }
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(c.adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(c.adam.l2_penalty >= 0.0)) throw ConfigError("l2_penalty must be nonnegative");
  return c;
}

nlohmann::json TrainingLog::to_json() const {
  return {{"epoch_loss", epoch_loss}, {"steps", steps}, {"kernel_bandwidth", kernel_bandwidth}};
}

KernelFeatureScaler KernelFeatureScaler::fit(const DagTransformer& model,
                                             const Tensor& design) {
  KernelFeatureScaler s;
  for (std::size_t node : model.layout().kernel_nodes)
    s.positions.push_back(model.input_position(node));
  const std::size_t n = design.rows();
  for (std::size_t k : s.positions) {
    double mu = 0.0;
    for (std::size_t r = 0; r < n; ++r) mu += design.at(r, k);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (design.at(r, k) - mu) * (design.at(r, k) - mu);
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    s.mean.push_back(mu);
    s.scale.push_back(var > 0.0 ? std::sqrt(var) : 1.0);
  }
  return s;
}

Tensor KernelFeatureScaler::features(const Tensor& design) const {
  const std::size_t n = design.rows(), p = positions.size();
  Tensor out({n, p});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c)
      out.at(r, c) = (design.at(r, positions[c]) - mean[c]) / scale[c];
  return out;
}

namespace {

struct HeadIndex {
  std::optional<std::size_t> outcome;
  std::optional<std::size_t> treatment;
};

HeadIndex locate_heads(const DagTransformer& model) {
  HeadIndex idx;
  const auto& dag = model.dag();
  for (std::size_t h = 0; h < model.num_heads(); ++h) {
    const NodeRole role = dag.node(model.layout().heads[h]).role;
    if (role == NodeRole::kOutcome) idx.outcome = h;
    if (role == NodeRole::kTreatment) idx.treatment = h;
  }
  return idx;
}

}  // namespace

TrainingLog train(DagTransformer& model, const TabularDataset& data,
                  const Objective& objective, const TrainConfig& config) {
  validate_objective(objective);
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  const HeadIndex heads = locate_heads(model);
  const bool needs_y = !std::holds_alternative<IptwObjective>(objective);
  const bool needs_a = std::holds_alternative<IptwObjective>(objective) ||
                       std::holds_alternative<AipwJointObjective>(objective);
  if (needs_y && !heads.outcome) {
    throw ConfigError("objective " + objective_name(objective) +
                      " needs an outcome head");
  }
  if (needs_a && (!heads.treatment || !model.head_is_binary(*heads.treatment))) {
    throw ConfigError("objective " + objective_name(objective) +
                      " needs a binary treatment head");
  }
  const auto* nmmr = std::get_if<NmmrObjective>(&objective);
  if (nmmr && model.layout().kernel_nodes.empty()) {
    throw ConfigError("NMMR objective needs proximal kernel nodes");
  }

  const Tensor design = model.design_matrix(data);
  model.fit_standardizer(design);
  const std::size_t n = design.rows(), d = design.cols();

  std::vector<double> y_std, a_obs;
  if (needs_y) {
    const auto& col = data.require_node(model.dag().node(model.layout().heads[*heads.outcome]).name);
    y_std = model.standardize_target(*heads.outcome, col.values);
  }
  if (needs_a) {
    a_obs = data.require_node(model.dag().node(model.layout().heads[*heads.treatment]).name).values;
  }

  TrainingLog log;
  KernelFeatureScaler kernel_scaler;
  double bandwidth = 0.0;
  Tensor kernel_rows;
  if (nmmr) {
    kernel_scaler = KernelFeatureScaler::fit(model, design);
    kernel_rows = kernel_scaler.features(design);
    if (nmmr->bandwidth) {
      bandwidth = *nmmr->bandwidth;
    } else {
      const std::size_t m = std::min<std::size_t>(n, 1000);
      const std::size_t p = kernel_rows.cols();
      Tensor sub({m, p});
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t r = i * n / m;
        for (std::size_t c = 0; c < p; ++c) sub.at(i, c) = kernel_rows.at(r, c);
      }
      bandwidth = median_heuristic_bandwidth(sub);
    }
    log.kernel_bandwidth = bandwidth;
  }

  const auto& params = model.parameters();
  nn::AdamState state = nn::make_adam_state(params, config.adam);
  Rng shuffle_rng(config.seed, /*stream=*/0x5A);
  Rng dropout_rng = shuffle_rng.split(1);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const std::size_t bs = std::min(config.batch_size, n);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[shuffle_rng.below(i)]);
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += bs)
      batches.emplace_back(start, std::min(n, start + bs));
    // A trailing singleton batch joins its predecessor.
    if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
      batches[batches.size() - 2].second = n;
      batches.pop_back();
    }
    double total = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto [lo, hi] = batches[b];
      const std::size_t m = hi - lo;
      Tensor xb({m, d});
      Tensor yb({m, 1}), ab({m, 1});
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t r = perm[lo + i];
        for (std::size_t c = 0; c < d; ++c) xb.at(i, c) = design.at(r, c);
        if (needs_y) yb[i] = y_std[r];
        if (needs_a) ab[i] = a_obs[r];
      }
      nn::Tape tape;
      const auto outs = model.forward(tape, xb, /*train=*/true, &dropout_rng);
      nn::Var loss;
      if (std::holds_alternative<GFormulaObjective>(objective)) {
        loss = loss_gformula(tape, outs[*heads.outcome], nn::constant(yb));
      } else if (std::holds_alternative<IptwObjective>(objective)) {
        loss = loss_iptw(tape, outs[*heads.treatment], nn::constant(ab));
      } else if (std::holds_alternative<AipwJointObjective>(objective)) {
        loss = loss_aipw_joint(tape, outs[*heads.outcome], nn::constant(yb),
                               outs[*heads.treatment], nn::constant(ab));
      } else {
        const std::size_t p = kernel_rows.cols();
        Tensor kb({m, p});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t c = 0; c < p; ++c) kb.at(i, c) = kernel_rows.at(perm[lo + i], c);
        loss = loss_nmmr(tape, nn::constant(yb), outs[*heads.outcome],
                         rbf_kernel_matrix(kb, bandwidth), nmmr->variant,
                         nmmr->lambda, params);
      }
      const double value = loss->value.item();
      if (!std::isfinite(value)) throw DivergedError(epoch, b);
      nn::zero_grad(params);
      tape.backward(loss);
      nn::adam_step(params, state);
      total += value;
      ++log.steps;
    }
    log.epoch_loss.push_back(total / static_cast<double>(batches.size()));
  }
  return log;
}

}  // namespace dagcausal
