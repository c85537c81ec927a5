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

#include "dagcausal/forest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dagcausal/errors.h"
#include "dagcausal/rng.h"

namespace dagcausal {

void ForestConfig::validate() const {
  if (trees == 0) throw ConfigError("forest needs at least one tree");
  if (min_leaf == 0) throw ConfigError("forest min_leaf must be positive");
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw ConfigError("forest subsample must lie in (0, 1]");
  }
}

nlohmann::json ForestConfig::to_json() const {
  return {{"trees", trees}, {"max_depth", max_depth}, {"min_leaf", min_leaf},
          {"subsample", subsample}, {"seed", seed}};
}

ForestConfig ForestConfig::from_json(const nlohmann::json& j) {
  ForestConfig c;
  try {
    c.trees = j.value("trees", c.trees);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.min_leaf = j.value("min_leaf", c.min_leaf);
    c.subsample = j.value("subsample", c.subsample);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed forest config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t HonestTree::leaf_of(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const Node& nd = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold
                                     ? nd.left
                                     : nd.right);
  }
  return i;
}

double HonestTree::predict(std::span<const double> x) const { return nodes[leaf_of(x)].value; }

namespace {

struct Builder {
  const Tensor& x;
  std::span<const double> y;
  const ForestConfig& cfg;
  Rng& rng;
  HonestTree& tree;
  std::vector<int> parent;

  int grow(std::vector<std::size_t> rows, std::size_t depth, int up) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    parent.push_back(up);
    if (depth >= cfg.max_depth || rows.size() < 2 * cfg.min_leaf) return id;

    const std::size_t p = x.cols();
    std::vector<std::size_t> feats(p);
    std::iota(feats.begin(), feats.end(), 0);
    const std::size_t mtry = std::max<std::size_t>(1, (p + 2) / 3);
    for (std::size_t i = 0; i < mtry; ++i) std::swap(feats[i], feats[i + rng.below(p - i)]);

    double best_gain = 0.0, best_thr = 0.0;
    int best_feat = -1;
    double total = 0.0;
    for (std::size_t r : rows) total += y[r];
    const double n = static_cast<double>(rows.size());
    std::vector<std::size_t> order(rows);
    for (std::size_t fi = 0; fi < mtry; ++fi) {
      const std::size_t f = feats[fi];
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x.at(a, f) < x.at(b, f) || (x.at(a, f) == x.at(b, f) && a < b);
      });
      double left = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        left += y[order[k]];
        const std::size_t nl = k + 1, nr = order.size() - nl;
        if (nl < cfg.min_leaf || nr < cfg.min_leaf) continue;
        const double xv = x.at(order[k], f), xn = x.at(order[k + 1], f);
        if (xv == xn) continue;
        // Squared-error reduction up to a constant.
        const double right = total - left;
        const double gain = left * left / static_cast<double>(nl) +
                            right * right / static_cast<double>(nr) - total * total / n;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feat = static_cast<int>(f);
          best_thr = 0.5 * (xv + xn);
        }
      }
    }
    if (best_feat < 0) return id;
    std::vector<std::size_t> lrows, rrows;
    for (std::size_t r : rows) {
      (x.at(r, static_cast<std::size_t>(best_feat)) <= best_thr ? lrows : rrows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(lrows), depth + 1, id);
    const int r = grow(std::move(rrows), depth + 1, id);
    auto& nd = tree.nodes[static_cast<std::size_t>(id)];
    nd.feature = best_feat;
    nd.threshold = best_thr;
    nd.left = l;
    nd.right = r;
    return id;
  }
};

HonestTree fit_tree(const Tensor& x, std::span<const double> y, const ForestConfig& cfg,
                    Rng rng) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t m = static_cast<std::size_t>(std::llround(cfg.subsample * static_cast<double>(n)));
  m = std::clamp<std::size_t>(m, std::min<std::size_t>(2, n), n);
  for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);

  HonestTree tree;
  const std::size_t half = std::max<std::size_t>(1, m / 2);
  tree.structure_rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half));
  tree.estimation_rows.assign(idx.begin() + static_cast<std::ptrdiff_t>(half),
                              idx.begin() + static_cast<std::ptrdiff_t>(m));
  if (tree.estimation_rows.empty()) tree.estimation_rows = tree.structure_rows;
  std::sort(tree.structure_rows.begin(), tree.structure_rows.end());
  std::sort(tree.estimation_rows.begin(), tree.estimation_rows.end());

  Builder b{x, y, cfg, rng, tree, {}};
  b.grow(tree.structure_rows, 0, -1);

  // Leaf means from the estimation half. Every node on an estimation row's
  // path accumulates it so an empty leaf can borrow from its ancestors.
  std::vector<double> sums(tree.nodes.size(), 0.0);
  for (std::size_t r : tree.estimation_rows) {
    std::size_t i = 0;
    for (;;) {
      sums[i] += y[r];
      ++tree.nodes[i].estimation_count;
      const auto& nd = tree.nodes[i];
      if (nd.feature < 0) break;
      i = static_cast<std::size_t>(
          x.at(r, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right);
    }
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    int k = static_cast<int>(i);
    while (tree.nodes[static_cast<std::size_t>(k)].estimation_count == 0) k = b.parent[static_cast<std::size_t>(k)];
    const auto& src = tree.nodes[static_cast<std::size_t>(k)];
    tree.nodes[i].value = sums[static_cast<std::size_t>(k)] / static_cast<double>(src.estimation_count);
  }
  return tree;
}

}  // namespace

HonestForest HonestForest::fit(const Tensor& x, std::span<const double> y,
                               const ForestConfig& config) {
  config.validate();
  if (x.rows() != y.size()) throw DimensionError("forest features and targets differ in rows");
  if (x.rows() == 0) throw InsufficientDataError("forest needs at least one row");
  HonestForest f;
  const Rng root(config.seed, /*stream=*/0xF0);
  for (std::size_t t = 0; t < config.trees; ++t) f.trees_.push_back(fit_tree(x, y, config, root.split(t)));
  return f;
}

double HonestForest::predict(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(x);
  return s / static_cast<double>(trees_.size());
}

std::vector<double> HonestForest::predict(const Tensor& x) const {
  std::vector<double> out(x.rows());
  const std::size_t p = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(x.data().subspan(r * p, p));
  return out;
}

Tensor PlugInEstimator::covariate_matrix(const TabularDataset& data) const {
  Tensor x({data.rows(), covariates_.size()});
  for (std::size_t c = 0; c < covariates_.size(); ++c) {
    const auto& v = data.column(covariates_[c]).values;
    for (std::size_t r = 0; r < data.rows(); ++r) x.at(r, c) = v[r];
  }
  return x;
}

PlugInEstimator PlugInEstimator::fit(const TabularDataset& validation,
                                     const ForestConfig& config) {
  config.validate();
  if (!validation.treatment_column() || !validation.outcome_column()) {
    throw ConfigError("plug-in estimator needs bound treatment and outcome columns");
  }
  const Column& a = validation.column(*validation.treatment_column());
  const Column& y = validation.column(*validation.outcome_column());
  if (a.kind != ColumnKind::kBinary) throw ConfigError("plug-in estimator needs a binary treatment");

  PlugInEstimator est;
  for (const auto& c : validation.columns()) {
    if (c.name != a.name && c.name != y.name) est.covariates_.push_back(c.name);
  }
  if (est.covariates_.empty()) throw ConfigError("plug-in estimator found no covariates");
  const Tensor x = est.covariate_matrix(validation);

  for (int arm = 0; arm <= 1; ++arm) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < validation.rows(); ++r)
      if (a.values[r] == static_cast<double>(arm)) rows.push_back(r);
    if (rows.size() < config.min_leaf) {
      throw InsufficientDataError("treatment arm " + std::to_string(arm) + " has " +
                                  std::to_string(rows.size()) + " rows, fewer than min_leaf " +
                                  std::to_string(config.min_leaf));
    }
    Tensor xa({rows.size(), x.cols()});
    std::vector<double> ya(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < x.cols(); ++c) xa.at(i, c) = x.at(rows[i], c);
      ya[i] = y.values[rows[i]];
    }
    ForestConfig arm_cfg = config;
    arm_cfg.seed = mix64(config.seed ^ (0xA0 + static_cast<std::uint64_t>(arm)));
    (arm == 0 ? est.mu0_ : est.mu1_) = HonestForest::fit(xa, ya, arm_cfg);
  }
  return est;
}

std::vector<double> PlugInEstimator::cate(const TabularDataset& data) const {
  const Tensor x = covariate_matrix(data);
  std::vector<double> m1 = mu1_.predict(x), m0 = mu0_.predict(x);
  for (std::size_t i = 0; i < m1.size(); ++i) m1[i] -= m0[i];
  return m1;
}

double PlugInEstimator::ate(const TabularDataset& data) const {
  const auto c = cate(data);
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

}  // namespace dagcausal
