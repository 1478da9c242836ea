// Brute-force reference implementations used by the unit and acceptance
// suites. Everything here is independent of the library's algorithms: trees
// are enumerated combinatorially and connectivity is checked by local DFS.
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "parsfm/graph.hpp"

namespace parsfm::oracle {

struct SimpleEdge {
  NodeId a;
  NodeId b;
  double weight;
};

inline bool edges_connect(const std::set<NodeId>& nodes,
                          const std::vector<SimpleEdge>& edges) {
  if (nodes.empty()) return false;
  std::map<NodeId, std::vector<NodeId>> adj;
  for (NodeId n : nodes) adj[n];
  for (const auto& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::set<NodeId> seen{*nodes.begin()};
  std::vector<NodeId> stack{*nodes.begin()};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    for (NodeId m : adj[n]) {
      if (seen.insert(m).second) stack.push_back(m);
    }
  }
  return seen.size() == nodes.size();
}

// Enumerates every spanning tree by trying all (n-1)-subsets of the edge set.
// Returns the min and max total weight; nullopt when the graph is
// disconnected. Only feasible for small graphs.
inline std::optional<std::pair<double, double>> spanning_tree_weight_range(
    const std::set<NodeId>& nodes, const std::vector<SimpleEdge>& edges) {
  const std::size_t n = nodes.size();
  if (n == 0) return std::nullopt;
  if (n == 1) return std::make_pair(0.0, 0.0);
  const std::size_t m = edges.size();
  if (m < n - 1) return std::nullopt;

  double best_min = std::numeric_limits<double>::infinity();
  double best_max = -std::numeric_limits<double>::infinity();
  bool any = false;

  std::vector<std::size_t> pick(n - 1);
  // iterate all combinations of size n-1 out of m
  for (std::size_t i = 0; i < n - 1; ++i) pick[i] = i;
  while (true) {
    std::vector<SimpleEdge> subset;
    subset.reserve(n - 1);
    double total = 0.0;
    for (std::size_t i : pick) {
      subset.push_back(edges[i]);
      total += edges[i].weight;
    }
    if (edges_connect(nodes, subset)) {
      any = true;
      best_min = std::min(best_min, total);
      best_max = std::max(best_max, total);
    }
    // next combination
    std::size_t k = n - 1;
    while (k > 0 && pick[k - 1] == m - (n - 1) + (k - 1)) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t i = k; i < n - 1; ++i) pick[i] = pick[i - 1] + 1;
  }
  if (!any) return std::nullopt;
  return std::make_pair(best_min, best_max);
}

// Height of the tree rooted at `root`, via plain DFS over an adjacency map.
inline std::size_t rooted_height(const std::set<NodeId>& nodes,
                                 const std::vector<SimpleEdge>& edges, NodeId root) {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (NodeId n : nodes) adj[n];
  for (const auto& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::size_t best = 0;
  std::vector<std::pair<NodeId, std::size_t>> stack{{root, 0}};
  std::set<NodeId> seen{root};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    for (NodeId m : adj[n]) {
      if (seen.insert(m).second) stack.emplace_back(m, d + 1);
    }
  }
  return best;
}

inline std::size_t min_rooted_height(const std::set<NodeId>& nodes,
                                     const std::vector<SimpleEdge>& edges) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (NodeId n : nodes) best = std::min(best, rooted_height(nodes, edges, n));
  return best;
}

}  // namespace parsfm::oracle
