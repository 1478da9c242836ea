#include "parsfm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "parsfm/error.hpp"

namespace parsfm {

namespace {

std::pair<NodeId, NodeId> ordered(NodeId a, NodeId b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

// Union-find with path halving and union by size.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

std::string format_components(const std::vector<std::set<NodeId>>& comps) {
  std::ostringstream os;
  const std::size_t shown = std::min<std::size_t>(comps.size(), 4);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) os << " | ";
    os << "{";
    std::size_t k = 0;
    for (NodeId n : comps[i]) {
      if (k) os << ",";
      if (k == 8) {
        os << "...";
        break;
      }
      os << n;
      ++k;
    }
    os << "}";
  }
  if (comps.size() > shown) os << " | ... (" << comps.size() << " components)";
  return os.str();
}

}  // namespace

void WeightedGraph::add_node(NodeId n) { nodes_.insert(n); }

void WeightedGraph::add_edge(NodeId a, NodeId b, double weight,
                             std::optional<std::uint64_t> payload) {
  if (a == b) {
    throw std::invalid_argument("self-loop rejected: node " + std::to_string(a));
  }
  if (!std::isfinite(weight) || weight < 0.0) {
    throw std::invalid_argument("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                ") has invalid weight");
  }
  nodes_.insert(a);
  nodes_.insert(b);
  const auto key = ordered(a, b);
  auto it = edges_.find(key);
  if (it == edges_.end()) {
    edges_[key] = Edge{key.first, key.second, weight, payload};
  } else if (weight > it->second.weight) {
    it->second.weight = weight;
    it->second.payload = payload;
  }
}

const Edge* WeightedGraph::find_edge(NodeId a, NodeId b) const {
  auto it = edges_.find(ordered(a, b));
  return it == edges_.end() ? nullptr : &it->second;
}

std::vector<Edge> WeightedGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& [key, e] : edges_) out.push_back(e);
  return out;
}

std::map<NodeId, std::vector<std::pair<NodeId, double>>> WeightedGraph::adjacency() const {
  std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;
  for (NodeId n : nodes_) adj[n];
  for (const auto& [key, e] : edges_) {
    adj[e.a].emplace_back(e.b, e.weight);
    adj[e.b].emplace_back(e.a, e.weight);
  }
  return adj;
}

double Tree::total_weight() const {
  double sum = 0.0;
  for (const Edge& e : edges) sum += e.weight;
  return sum;
}

std::map<NodeId, std::vector<std::pair<NodeId, const Edge*>>> Tree::adjacency() const {
  std::map<NodeId, std::vector<std::pair<NodeId, const Edge*>>> adj;
  for (NodeId n : nodes) adj[n];
  for (const Edge& e : edges) {
    adj[e.a].emplace_back(e.b, &e);
    adj[e.b].emplace_back(e.a, &e);
  }
  return adj;
}

WeightedGraph build_graph(
    const std::vector<std::tuple<NodeId, NodeId, double>>& edge_list) {
  WeightedGraph g;
  for (const auto& [a, b, w] : edge_list) g.add_edge(a, b, w);
  return g;
}

std::vector<std::set<NodeId>> connected_components(const WeightedGraph& g) {
  const auto adj = g.adjacency();
  std::set<NodeId> unvisited = g.nodes();
  std::vector<std::set<NodeId>> comps;
  while (!unvisited.empty()) {
    const NodeId start = *unvisited.begin();
    std::set<NodeId> comp;
    std::deque<NodeId> queue{start};
    unvisited.erase(start);
    while (!queue.empty()) {
      const NodeId n = queue.front();
      queue.pop_front();
      comp.insert(n);
      for (const auto& [m, w] : adj.at(n)) {
        if (unvisited.erase(m)) queue.push_back(m);
      }
    }
    comps.push_back(std::move(comp));
  }
  return comps;  // ordered by smallest member: unvisited is an ordered set
}

Tree make_tree(std::set<NodeId> nodes, std::vector<Edge> edges) {
  if (nodes.empty()) throw std::invalid_argument("tree must have at least one node");
  if (edges.size() != nodes.size() - 1) {
    throw std::invalid_argument("tree needs |nodes|-1 edges, got " +
                                std::to_string(edges.size()));
  }
  std::map<NodeId, std::size_t> index;
  for (NodeId n : nodes) index.emplace(n, index.size());
  DisjointSet ds(nodes.size());
  for (const Edge& e : edges) {
    auto ia = index.find(e.a);
    auto ib = index.find(e.b);
    if (ia == index.end() || ib == index.end()) {
      throw std::invalid_argument("tree edge references unknown node");
    }
    if (!ds.unite(ia->second, ib->second)) {
      throw std::invalid_argument("tree edges contain a cycle");
    }
  }
  return Tree{std::move(nodes), std::move(edges)};
}

Tree spanning_tree(const WeightedGraph& g, SpanningObjective objective) {
  if (g.num_nodes() == 0) throw std::invalid_argument("spanning tree of empty graph");

  std::vector<Edge> edges = g.edges();
  std::stable_sort(edges.begin(), edges.end(), [objective](const Edge& x, const Edge& y) {
    if (x.weight != y.weight) {
      return objective == SpanningObjective::kMinimize ? x.weight < y.weight
                                                       : x.weight > y.weight;
    }
    return std::make_pair(x.a, x.b) < std::make_pair(y.a, y.b);
  });

  std::map<NodeId, std::size_t> index;
  for (NodeId n : g.nodes()) index.emplace(n, index.size());
  DisjointSet ds(g.num_nodes());

  std::vector<Edge> accepted;
  accepted.reserve(g.num_nodes() - 1);
  for (const Edge& e : edges) {
    if (ds.unite(index.at(e.a), index.at(e.b))) accepted.push_back(e);
  }
  if (accepted.size() + 1 != g.num_nodes()) {
    throw DisconnectedGraphError("graph is disconnected: " +
                                 format_components(connected_components(g)));
  }
  return Tree{g.nodes(), std::move(accepted)};
}

namespace {

// Index-compressed view of (a subset of) a graph used by the partitioner.
struct Subgraph {
  std::vector<std::vector<std::pair<int, double>>> adj;  // local indices
  std::vector<double> degree;                            // weighted degree
  int n = 0;
};

Subgraph induced(const std::vector<std::vector<std::pair<int, double>>>& full_adj,
                 const std::vector<int>& members) {
  Subgraph sg;
  sg.n = static_cast<int>(members.size());
  std::map<int, int> local;
  for (int i = 0; i < sg.n; ++i) local[members[i]] = i;
  sg.adj.resize(sg.n);
  sg.degree.assign(sg.n, 0.0);
  for (int i = 0; i < sg.n; ++i) {
    for (const auto& [j, w] : full_adj[members[i]]) {
      auto it = local.find(j);
      if (it == local.end()) continue;
      sg.adj[i].emplace_back(it->second, w);
      sg.degree[i] += w;
    }
  }
  return sg;
}

double ncut_score(double cut, double vol_a, double vol_b) {
  double score = 0.0;
  if (cut > 0.0) {
    score += cut / vol_a;
    score += cut / vol_b;
  }
  return score;
}

// Normalized-cut bisection of sg into sides of size within [lo, hi] for side
// A (side B gets the rest). Exhaustive below 12 nodes, otherwise BFS seeding
// refined by greedy boundary moves.
std::vector<char> bisect(const Subgraph& sg, int target, int lo, int hi, bool symmetric) {
  const int n = sg.n;
  std::vector<char> side(n, 0);

  if (n < 12) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    bool found = false;
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
      if (symmetric && !(mask & 1u)) continue;  // fix node 0 in A to kill mirror duplicates
      const int size_a = __builtin_popcount(mask);
      if (size_a < lo || size_a > hi) continue;
      double cut = 0.0, vol_a = 0.0, vol_b = 0.0;
      for (int i = 0; i < n; ++i) {
        const bool in_a = (mask >> i) & 1u;
        (in_a ? vol_a : vol_b) += sg.degree[i];
        if (!in_a) continue;
        for (const auto& [j, w] : sg.adj[i]) {
          if (!((mask >> j) & 1u)) cut += w;
        }
      }
      const double score = ncut_score(cut, vol_a, vol_b);
      if (!found || score < best - 1e-15) {
        best = score;
        best_mask = mask;
        found = true;
      }
    }
    if (!found) throw std::logic_error("bisection window infeasible");
    for (int i = 0; i < n; ++i) side[i] = (best_mask >> i) & 1u ? 1 : 0;
    return side;
  }

  // BFS seeding from the smallest index; jumps to the next unvisited node when
  // a component is exhausted, so disconnected inputs seed cleanly.
  std::vector<char> in_a(n, 0);
  int size_a = 0;
  std::vector<char> visited(n, 0);
  std::deque<int> queue;
  int scan = 0;
  while (size_a < target) {
    if (queue.empty()) {
      while (scan < n && visited[scan]) ++scan;
      if (scan == n) break;
      visited[scan] = 1;
      queue.push_back(scan);
    }
    const int v = queue.front();
    queue.pop_front();
    in_a[v] = 1;
    ++size_a;
    for (const auto& [j, w] : sg.adj[v]) {
      if (!visited[j]) {
        visited[j] = 1;
        queue.push_back(j);
      }
    }
  }

  // Greedy refinement: steepest single-node move among boundary nodes that
  // keeps both sides inside the size window.
  double cut = 0.0, vol_a = 0.0, vol_b = 0.0;
  std::vector<double> ext(n, 0.0);  // weight to the other side
  for (int i = 0; i < n; ++i) {
    (in_a[i] ? vol_a : vol_b) += sg.degree[i];
    for (const auto& [j, w] : sg.adj[i]) {
      if (in_a[i] != in_a[j]) {
        ext[i] += w;
        if (in_a[i]) cut += w;
      }
    }
  }

  const int max_moves = 2 * n;
  for (int move = 0; move < max_moves; ++move) {
    const double current = ncut_score(cut, vol_a, vol_b);
    double best_gain = 1e-12;
    int best_v = -1;
    double best_cut = 0.0;
    for (int v = 0; v < n; ++v) {
      if (ext[v] <= 0.0) continue;  // interior node; moving it cannot reduce the cut
      const int new_size_a = size_a + (in_a[v] ? -1 : 1);
      if (new_size_a < lo || new_size_a > hi) continue;
      const double internal = sg.degree[v] - ext[v];
      const double new_cut = cut - ext[v] + internal;
      const double new_vol_a = vol_a + (in_a[v] ? -sg.degree[v] : sg.degree[v]);
      const double new_vol_b = vol_b + (in_a[v] ? sg.degree[v] : -sg.degree[v]);
      const double gain = current - ncut_score(new_cut, new_vol_a, new_vol_b);
      if (gain > best_gain) {
        best_gain = gain;
        best_v = v;
        best_cut = new_cut;
      }
    }
    if (best_v < 0) break;
    const int v = best_v;
    const bool was_a = in_a[v];
    in_a[v] = !was_a;
    size_a += was_a ? -1 : 1;
    vol_a += was_a ? -sg.degree[v] : sg.degree[v];
    vol_b += was_a ? sg.degree[v] : -sg.degree[v];
    cut = best_cut;
    ext[v] = sg.degree[v] - ext[v];
    for (const auto& [j, w] : sg.adj[v]) {
      ext[j] += (in_a[j] == in_a[v]) ? -w : w;
    }
  }

  for (int i = 0; i < n; ++i) side[i] = in_a[i];
  return side;
}

void partition_recursive(const std::vector<std::vector<std::pair<int, double>>>& full_adj,
                         const std::vector<int>& members, int k, int lo_final,
                         int hi_final, std::vector<std::vector<int>>& out) {
  if (k == 1) {
    out.push_back(members);
    return;
  }
  const int n = static_cast<int>(members.size());
  const int k1 = (k + 1) / 2;
  const int k2 = k - k1;
  const int lo = std::max(k1 * lo_final, n - k2 * hi_final);
  const int hi = std::min(k1 * hi_final, n - k2 * lo_final);
  int target = static_cast<int>(std::lround(static_cast<double>(n) * k1 / k));
  target = std::clamp(target, lo, hi);

  const Subgraph sg = induced(full_adj, members);
  const std::vector<char> side = bisect(sg, target, lo, hi, k1 == k2);

  std::vector<int> part_a, part_b;
  for (int i = 0; i < n; ++i) (side[i] ? part_a : part_b).push_back(members[i]);
  partition_recursive(full_adj, part_a, k1, lo_final, hi_final, out);
  partition_recursive(full_adj, part_b, k2, lo_final, hi_final, out);
}

}  // namespace

std::vector<std::set<NodeId>> balanced_partition(const WeightedGraph& g, int k,
                                                 int max_part) {
  const int n = static_cast<int>(g.num_nodes());
  if (k < 1 || k > n) {
    throw std::invalid_argument("K=" + std::to_string(k) + " out of range for " +
                                std::to_string(n) + " nodes");
  }
  std::vector<NodeId> ids(g.nodes().begin(), g.nodes().end());
  if (k == 1) return {std::set<NodeId>(ids.begin(), ids.end())};

  std::map<NodeId, int> index;
  for (int i = 0; i < n; ++i) index[ids[i]] = i;
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const Edge& e : g.edges()) {
    const int ia = index.at(e.a);
    const int ib = index.at(e.b);
    adj[ia].emplace_back(ib, e.weight);
    adj[ib].emplace_back(ia, e.weight);
  }

  const int lo_final = std::max(1, static_cast<int>(std::ceil((n / k) * 0.8)));
  int hi_final =
      std::max(1, static_cast<int>(std::floor(std::ceil(static_cast<double>(n) / k) * 1.2)));
  if (max_part > 0 && static_cast<long long>(k) * max_part >= n) {
    hi_final = std::min(hi_final, max_part);
  }

  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::vector<int>> parts;
  partition_recursive(adj, all, k, lo_final, hi_final, parts);

  std::vector<std::set<NodeId>> result;
  result.reserve(parts.size());
  for (const auto& part : parts) {
    std::set<NodeId> s;
    for (int i : part) s.insert(ids[i]);
    result.push_back(std::move(s));
  }
  std::sort(result.begin(), result.end(),
            [](const auto& x, const auto& y) { return *x.begin() < *y.begin(); });
  return result;
}

PeelResult peel_to_center(const Tree& t) {
  PeelResult result;
  std::map<NodeId, std::set<NodeId>> adj;
  for (NodeId n : t.nodes) adj[n];
  for (const Edge& e : t.edges) {
    adj[e.a].insert(e.b);
    adj[e.b].insert(e.a);
  }
  std::set<NodeId> alive = t.nodes;
  while (alive.size() > 2) {
    std::set<NodeId> leaves;
    for (NodeId n : alive) {
      if (adj[n].size() <= 1) leaves.insert(n);
    }
    for (NodeId leaf : leaves) {
      for (NodeId m : adj[leaf]) adj[m].erase(leaf);
      adj[leaf].clear();
      alive.erase(leaf);
    }
    result.layers.push_back(std::move(leaves));
  }
  result.survivors.assign(alive.begin(), alive.end());
  return result;
}

std::size_t tree_height(const Tree& t, NodeId root) {
  if (!t.nodes.count(root)) {
    throw std::invalid_argument("unknown root " + std::to_string(root));
  }
  const auto adj = t.adjacency();
  std::size_t height = 0;
  std::set<NodeId> visited{root};
  std::deque<std::pair<NodeId, std::size_t>> queue{{root, 0}};
  while (!queue.empty()) {
    const auto [n, d] = queue.front();
    queue.pop_front();
    height = std::max(height, d);
    for (const auto& [m, e] : adj.at(n)) {
      if (visited.insert(m).second) queue.emplace_back(m, d + 1);
    }
  }
  return height;
}

}  // namespace parsfm
