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

#include "dagcausal/causal_dag.h"

#include <algorithm>
#include <limits>
#include <set>

#include "dagcausal/errors.h"

namespace dagcausal {

namespace {

constexpr std::pair<NodeRole, std::string_view> kRoleNames[] = {
    {NodeRole::kTreatment, "treatment"},
    {NodeRole::kOutcome, "outcome"},
    {NodeRole::kConfounder, "confounder"},
    {NodeRole::kUnmeasured, "unmeasured"},
    {NodeRole::kTreatmentProxy, "treatment_proxy"},
    {NodeRole::kOutcomeProxy, "outcome_proxy"},
};

}  // namespace

std::string_view role_name(NodeRole role) {
  for (const auto& [r, name] : kRoleNames) {
    if (r == role) return name;
  }
  return "unknown";
}

NodeRole parse_role(std::string_view name) {
  for (const auto& [r, n] : kRoleNames) {
    if (n == name) return r;
  }
  throw ConfigError("unknown node role '" + std::string(name) + "'");
}

CausalDag::CausalDag(std::vector<DagNode> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const std::size_t n = nodes_.size();
  if (n == 0) throw ConfigError("DAG must have at least one node");
  std::set<std::string> names;
  int treatments = 0, outcomes = 0;
  for (const auto& node : nodes_) {
    if (node.name.empty()) throw ConfigError("DAG node with empty name");
    if (!names.insert(node.name).second) {
      throw ConfigError("duplicate DAG node name '" + node.name + "'");
    }
    treatments += node.role == NodeRole::kTreatment;
    outcomes += node.role == NodeRole::kOutcome;
  }
  if (treatments > 1) throw ConfigError("DAG has more than one treatment node");
  if (outcomes > 1) throw ConfigError("DAG has more than one outcome node");

  adjacency_.assign(n * n, 0);
  for (const auto& [p, c] : edges_) {
    if (p >= n || c >= n) throw ConfigError("DAG edge index out of range");
    if (p == c) {
      throw ConfigError("self edge on DAG node '" + nodes_[p].name + "'");
    }
    adjacency_[p * n + c] = 1;
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  // Kahn's algorithm; leftover nodes lie on a cycle.
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& e : edges_) ++indegree[e.second];
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::size_t u = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t v = 0; v < n; ++v) {
      if (adjacency_[u * n + v] && --indegree[v] == 0) ready.push_back(v);
    }
  }
  if (visited != n) throw ConfigError("DAG contains a directed cycle");
}

CausalDag CausalDag::from_names(
    std::vector<DagNode> nodes,
    const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<Edge> idx;
  auto lookup = [&](const std::string& name) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name) return i;
    throw ConfigError("edge references unknown node '" + name + "'");
  };
  for (const auto& [p, c] : edges) idx.emplace_back(lookup(p), lookup(c));
  return CausalDag(std::move(nodes), std::move(idx));
}

std::optional<std::size_t> CausalDag::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name) return i;
  return std::nullopt;
}

std::size_t CausalDag::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ConfigError("DAG has no node named '" + std::string(name) + "'");
}

bool CausalDag::has_edge(std::size_t parent, std::size_t child) const {
  return adjacency_.at(parent * size() + child) != 0;
}

std::vector<std::size_t> CausalDag::parents(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (has_edge(j, i)) out.push_back(j);
  return out;
}

std::vector<std::size_t> CausalDag::ancestors(std::size_t i) const {
  std::vector<std::uint8_t> seen(size(), 0);
  std::vector<std::size_t> stack = parents(i);
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (seen[u]) continue;
    seen[u] = 1;
    for (auto p : parents(u)) stack.push_back(p);
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (seen[j]) out.push_back(j);
  return out;
}

std::vector<std::size_t> CausalDag::with_role(NodeRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (nodes_[i].role == role) out.push_back(i);
  return out;
}

std::optional<std::size_t> CausalDag::treatment() const {
  auto v = with_role(NodeRole::kTreatment);
  if (v.empty()) return std::nullopt;
  return v.front();
}

std::optional<std::size_t> CausalDag::outcome() const {
  auto v = with_role(NodeRole::kOutcome);
  if (v.empty()) return std::nullopt;
  return v.front();
}

CausalDag CausalDag::induced(const std::vector<std::size_t>& keep) const {
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> remap(size(), kNone);
  std::vector<DagNode> nodes;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    remap.at(keep[k]) = k;
    nodes.push_back(nodes_.at(keep[k]));
  }
  std::vector<Edge> edges;
  for (const auto& [p, c] : edges_) {
    if (remap[p] != kNone && remap[c] != kNone)
      edges.emplace_back(remap[p], remap[c]);
  }
  return CausalDag(std::move(nodes), std::move(edges));
}

nlohmann::json CausalDag::to_json() const {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes_) {
    j["nodes"].push_back({{"name", n.name}, {"role", role_name(n.role)}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& [p, c] : edges_) {
    j["edges"].push_back({nodes_[p].name, nodes_[c].name});
  }
  return j;
}

CausalDag CausalDag::from_json(const nlohmann::json& j) {
  try {
    std::vector<DagNode> nodes;
    for (const auto& n : j.at("nodes")) {
      nodes.push_back({n.at("name").get<std::string>(),
                       parse_role(n.at("role").get<std::string>())});
    }
    std::vector<std::pair<std::string, std::string>> edges;
    if (j.contains("edges")) {
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) {
          throw ConfigError("DAG edge must be a [parent, child] pair");
        }
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
    }
    return from_names(std::move(nodes), edges);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed DAG JSON: ") + e.what());
  }
}

bool CausalDag::operator==(const CausalDag& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name != other.nodes_[i].name ||
        nodes_[i].role != other.nodes_[i].role)
      return false;
  }
  return edges_ == other.edges_;
}

BinaryMatrix build_adjacency(const CausalDag& dag) {
  const std::size_t n = dag.size();
  BinaryMatrix adj(n, std::vector<int>(n, 0));
  for (const auto& [p, c] : dag.edges()) adj[p][c] = 1;
  return adj;
}

AttentionMask::AttentionMask(std::size_t n) : n_(n), forbidden_(n * n, 1) {}

BinaryMatrix AttentionMask::values() const {
  BinaryMatrix out(n_, std::vector<int>(n_, 0));
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out[i][j] = allowed(i, j) ? 0 : 1;
  return out;
}

std::vector<double> AttentionMask::additive() const {
  std::vector<double> out(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_ * n_; ++i) {
    if (forbidden_[i]) out[i] = -std::numeric_limits<double>::infinity();
  }
  return out;
}

AttentionMask build_mask(const BinaryMatrix& adj) {
  const std::size_t n = adj.size();
  for (const auto& row : adj) {
    if (row.size() != n) {
      throw DimensionError("attention mask needs a square adjacency matrix, "
                           "got " + std::to_string(n) + " rows with a row of " +
                           std::to_string(row.size()) + " columns");
    }
  }
  AttentionMask mask(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      mask.set_forbidden(i, j, !(adj[j][i] == 1 || i == j));
  return mask;
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kGFormula: return "gformula";
    case Method::kIpw: return "ipw";
    case Method::kAipw: return "aipw";
    case Method::kProximal: return "proximal";
  }
  return "unknown";
}

ModelLayout input_nodes_for(Method method, const CausalDag& dag) {
  auto require = [&](NodeRole role) {
    auto v = dag.with_role(role);
    if (v.empty()) {
      throw ConfigError(std::string(method_name(method)) +
                        " requires a DAG node with role '" +
                        std::string(role_name(role)) + "'");
    }
    return v.front();
  };
  ModelLayout layout{method, {}, {}, {}};
  std::vector<NodeRole> roles;
  switch (method) {
    case Method::kGFormula: {
      require(NodeRole::kTreatment);
      layout.heads = {require(NodeRole::kOutcome)};
      roles = {NodeRole::kConfounder, NodeRole::kTreatment, NodeRole::kOutcome};
      break;
    }
    case Method::kIpw: {
      layout.heads = {require(NodeRole::kTreatment)};
      roles = {NodeRole::kConfounder, NodeRole::kTreatment};
      break;
    }
    case Method::kAipw: {
      const std::size_t a = require(NodeRole::kTreatment);
      layout.heads = {a, require(NodeRole::kOutcome)};
      roles = {NodeRole::kConfounder, NodeRole::kTreatment, NodeRole::kOutcome};
      break;
    }
    case Method::kProximal: {
      require(NodeRole::kTreatment);
      require(NodeRole::kTreatmentProxy);
      require(NodeRole::kOutcomeProxy);
      layout.heads = {require(NodeRole::kOutcome)};
      roles = {NodeRole::kConfounder, NodeRole::kTreatment,
               NodeRole::kTreatmentProxy, NodeRole::kOutcomeProxy,
               NodeRole::kOutcome};
      break;
    }
  }
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (std::find(roles.begin(), roles.end(), dag.node(i).role) != roles.end())
      layout.inputs.push_back(i);
  }
  if (method == Method::kProximal) {
    for (std::size_t i : layout.inputs) {
      const NodeRole r = dag.node(i).role;
      if (r == NodeRole::kTreatment || r == NodeRole::kTreatmentProxy ||
          r == NodeRole::kConfounder)
        layout.kernel_nodes.push_back(i);
    }
  }
  return layout;
}

}  // namespace dagcausal
