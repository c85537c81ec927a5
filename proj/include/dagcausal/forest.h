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

#ifndef DAGCAUSAL_FOREST_H_
#define DAGCAUSAL_FOREST_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dagcausal/dataset.h"
#include "dagcausal/tensor.h"
#include "json.hpp"

namespace dagcausal {

struct ForestConfig {
  std::size_t trees = 200;
  std::size_t max_depth = 8;
  std::size_t min_leaf = 5;
  double subsample = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static ForestConfig from_json(const nlohmann::json& j);
};

// Regression tree whose splits are chosen on one half of its subsample and
// whose leaf values are averaged over the other half.
struct HonestTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t estimation_count = 0;
  };
  std::vector<Node> nodes;
  std::vector<std::size_t> structure_rows;
  std::vector<std::size_t> estimation_rows;

  double predict(std::span<const double> x) const;
  // Index of the leaf reached by x.
  std::size_t leaf_of(std::span<const double> x) const;
};

class HonestForest {
 public:
  // `x` is n x p, `y` has n entries.
  static HonestForest fit(const Tensor& x, std::span<const double> y,
                          const ForestConfig& config);

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Tensor& x) const;
  const std::vector<HonestTree>& trees() const { return trees_; }

 private:
  std::vector<HonestTree> trees_;
};

// T-learner: one honest forest per treatment arm, tau(x) = mu1(x) - mu0(x).
class PlugInEstimator {
 public:
  // Covariates are every column not bound to the treatment or outcome node.
  // Throws InsufficientDataError when an arm has fewer than min_leaf rows.
  static PlugInEstimator fit(const TabularDataset& validation, const ForestConfig& config);

  std::vector<double> cate(const TabularDataset& data) const;
  double ate(const TabularDataset& data) const;
  const std::vector<std::string>& covariates() const { return covariates_; }
  const HonestForest& control_forest() const { return mu0_; }
  const HonestForest& treated_forest() const { return mu1_; }

 private:
  Tensor covariate_matrix(const TabularDataset& data) const;

  std::vector<std::string> covariates_;
  HonestForest mu0_;
  HonestForest mu1_;
};

}  // namespace dagcausal

#endif  // DAGCAUSAL_FOREST_H_
