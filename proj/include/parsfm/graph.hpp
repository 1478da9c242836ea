#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace parsfm {

using NodeId = std::uint64_t;

struct Edge {
  NodeId a = 0;
  NodeId b = 0;
  double weight = 0.0;
  std::optional<std::uint64_t> payload;  // opaque tag carried through tree ops
};

/// Weighted undirected graph. No self-loops; at most one edge per unordered
/// pair (duplicate insertions keep the larger weight and its payload); weights
/// are finite and >= 0.
class WeightedGraph {
 public:
  void add_node(NodeId n);
  void add_edge(NodeId a, NodeId b, double weight,
                std::optional<std::uint64_t> payload = std::nullopt);

  bool has_node(NodeId n) const { return nodes_.count(n) > 0; }
  const Edge* find_edge(NodeId a, NodeId b) const;

  const std::set<NodeId>& nodes() const { return nodes_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  /// Edges sorted by (a, b).
  std::vector<Edge> edges() const;

  /// Neighbor list per node, sorted by node id.
  std::map<NodeId, std::vector<std::pair<NodeId, double>>> adjacency() const;

 private:
  std::set<NodeId> nodes_;
  std::map<std::pair<NodeId, NodeId>, Edge> edges_;  // keyed with a < b
};

/// Connected acyclic subgraph: |edges| = |nodes| - 1, validated on build.
struct Tree {
  std::set<NodeId> nodes;
  std::vector<Edge> edges;  // in spanning-tree acceptance order

  double total_weight() const;
  std::map<NodeId, std::vector<std::pair<NodeId, const Edge*>>> adjacency() const;
};

enum class SpanningObjective { kMinimize, kMaximize };

struct PeelResult {
  std::vector<NodeId> survivors;          // 1 or 2 nodes, ascending
  std::vector<std::set<NodeId>> layers;   // leaves removed per round
};

/// Builds a graph from an edge list. Rejects self-loops and negative or
/// non-finite weights; duplicates keep the larger weight.
WeightedGraph build_graph(
    const std::vector<std::tuple<NodeId, NodeId, double>>& edge_list);

/// Maximal connected node sets, ordered by smallest member.
std::vector<std::set<NodeId>> connected_components(const WeightedGraph& g);

/// Kruskal spanning tree with union-find. Ties are broken by (weight, node-id
/// pair) so the result is a deterministic function of the graph. Throws
/// DisconnectedGraphError naming the components when g is not connected.
Tree spanning_tree(const WeightedGraph& g, SpanningObjective objective);

/// Validates tree invariants and builds a Tree from explicit parts.
Tree make_tree(std::set<NodeId> nodes, std::vector<Edge> edges);

/// Splits g.nodes into exactly K disjoint nonempty parts of similar size,
/// heuristically minimizing the normalized cut. Recursive bisection: exhaustive
/// below 12 nodes, BFS seeding plus greedy boundary refinement above. Part
/// sizes stay within [floor(n/K)*0.8, ceil(n/K)*1.2], clamped to >= 1; a
/// positive max_part additionally caps part sizes when K * max_part >= n.
/// Output parts are ordered by smallest member.
std::vector<std::set<NodeId>> balanced_partition(const WeightedGraph& g, int k,
                                                 int max_part = 0);

/// Removes all current leaves layer by layer until <= 2 nodes remain. The
/// survivors are exactly the roots minimizing rooted tree height.
PeelResult peel_to_center(const Tree& t);

/// Number of edges on the longest root-to-leaf path.
std::size_t tree_height(const Tree& t, NodeId root);

}  // namespace parsfm
