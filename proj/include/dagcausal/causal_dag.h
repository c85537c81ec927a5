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

#ifndef DAGCAUSAL_CAUSAL_DAG_H_
#define DAGCAUSAL_CAUSAL_DAG_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace dagcausal {

enum class NodeRole {
  kTreatment,
  kOutcome,
  kConfounder,
  kUnmeasured,
  kTreatmentProxy,
  kOutcomeProxy,
};

std::string_view role_name(NodeRole role);
NodeRole parse_role(std::string_view name);

struct DagNode {
  std::string name;
  NodeRole role;
};

using Edge = std::pair<std::size_t, std::size_t>;  // parent -> child

// Directed acyclic graph over role-tagged nodes. Node order is the order of
// construction and indexes every derived matrix. Immutable once built.
class CausalDag {
 public:
  // Throws ConfigError on duplicate names, out-of-range or self edges, a
  // directed cycle, or more than one treatment/outcome node.
  CausalDag(std::vector<DagNode> nodes, std::vector<Edge> edges);

  static CausalDag from_names(
      std::vector<DagNode> nodes,
      const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<DagNode>& nodes() const { return nodes_; }
  const DagNode& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  bool has_edge(std::size_t parent, std::size_t child) const;
  std::vector<std::size_t> parents(std::size_t i) const;
  std::vector<std::size_t> ancestors(std::size_t i) const;
  std::vector<std::size_t> with_role(NodeRole role) const;
  std::optional<std::size_t> treatment() const;
  std::optional<std::size_t> outcome() const;

  // Subgraph on `keep` (in the given order), retaining edges among them.
  CausalDag induced(const std::vector<std::size_t>& keep) const;

  nlohmann::json to_json() const;
  static CausalDag from_json(const nlohmann::json& j);

  bool operator==(const CausalDag& other) const;

 private:
  std::vector<DagNode> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::uint8_t> adjacency_;
};

using BinaryMatrix = std::vector<std::vector<int>>;

// adj[i][j] == 1 iff the DAG has the edge i -> j.
BinaryMatrix build_adjacency(const CausalDag& dag);

// Attention permission matrix. Row i lists the nodes i may attend to.
class AttentionMask {
 public:
  explicit AttentionMask(std::size_t n);

  std::size_t size() const { return n_; }
  bool allowed(std::size_t i, std::size_t j) const {
    return forbidden_[i * n_ + j] == 0;
  }
  void set_forbidden(std::size_t i, std::size_t j, bool forbidden) {
    forbidden_[i * n_ + j] = forbidden ? 1 : 0;
  }
  // 1 = forbidden, 0 = allowed.
  BinaryMatrix values() const;
  // 0 where allowed, -inf where forbidden, row-major.
  std::vector<double> additive() const;

 private:
  std::size_t n_;
  std::vector<std::uint8_t> forbidden_;
};

// Node i may attend to j iff adj[j][i] == 1 or i == j. Throws
// DimensionError for a non-square input.
AttentionMask build_mask(const BinaryMatrix& adj);

enum class Method { kGFormula, kIpw, kAipw, kProximal };

std::string_view method_name(Method m);

// Which DAG nodes a method feeds to the model and which nodes it predicts.
struct ModelLayout {
  Method method;
  // DAG indices in DAG order. Unmeasured nodes are never present.
  std::vector<std::size_t> inputs;
  // DAG indices of the predicted nodes, in head order.
  std::vector<std::size_t> heads;
  // Proximal only: DAG indices of the (A, Z, X) kernel arguments.
  std::vector<std::size_t> kernel_nodes;
};

// Throws ConfigError naming the missing role when the DAG cannot support
// `method`.
ModelLayout input_nodes_for(Method method, const CausalDag& dag);

}  // namespace dagcausal

#endif  // DAGCAUSAL_CAUSAL_DAG_H_
