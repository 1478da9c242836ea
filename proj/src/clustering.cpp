#include "parsfm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "parsfm/rng.hpp"

namespace parsfm {

void ClusteringParams::validate() const {
  if (s_max < 2) throw std::invalid_argument("s_max must be >= 2");
  if (!(tau_c > 0.0) || tau_c > 1.0) throw std::invalid_argument("tau_c must be in (0,1]");
  if (o_max < 1) throw std::invalid_argument("o_max must be >= 1");
  if (size_slack < 0.0) throw std::invalid_argument("size_slack must be >= 0");
  if (max_random_rounds < 0) throw std::invalid_argument("max_random_rounds must be >= 0");
}

int ClusteringParams::size_cap() const {
  return static_cast<int>(std::floor(s_max * (1.0 + size_slack)));
}

std::map<NodeId, std::vector<int>> ClusterSet::provenance() const {
  std::map<NodeId, std::vector<int>> out;
  for (int i = 0; i < static_cast<int>(clusters.size()); ++i) {
    for (NodeId n : clusters[i]) out[n].push_back(i);
  }
  return out;
}

std::size_t LostEdgeMap::total_edges() const {
  std::size_t n = 0;
  for (const auto& [pair, list] : by_pair) n += list.size();
  return n;
}

namespace {

std::vector<std::set<NodeId>> sorted_by_smallest(std::vector<std::set<NodeId>> parts) {
  std::sort(parts.begin(), parts.end(),
            [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
  return parts;
}

WeightedGraph induced_subgraph(const WeightedGraph& g, const std::set<NodeId>& nodes) {
  WeightedGraph sub;
  for (NodeId n : nodes) sub.add_node(n);
  for (const Edge& e : g.edges()) {
    if (nodes.count(e.a) && nodes.count(e.b)) sub.add_edge(e.a, e.b, e.weight, e.payload);
  }
  return sub;
}

}  // namespace

ClusterSet cut_images(const WeightedGraph& g, const ClusteringParams& params) {
  params.validate();
  const int n = static_cast<int>(g.num_nodes());
  if (n == 0) throw std::invalid_argument("match graph is empty");

  const int k = std::max(1, n / params.s_max);
  if (k == 1) return ClusterSet{{g.nodes()}};

  const auto comps = connected_components(g);
  if (comps.size() == 1) {
    return ClusterSet{sorted_by_smallest(balanced_partition(g, k, params.size_cap()))};
  }

  std::vector<std::set<NodeId>> parts;
  if (static_cast<int>(comps.size()) >= k) {
    // More components than requested parts: pack whole components into K bins,
    // largest first onto the lightest bin.
    std::vector<std::size_t> order(comps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return comps[a].size() > comps[b].size();
    });
    std::vector<std::set<NodeId>> bins(k);
    std::vector<std::size_t> load(k, 0);
    for (std::size_t idx : order) {
      int best = 0;
      for (int b = 1; b < k; ++b) {
        if (load[b] < load[best]) best = b;
      }
      bins[best].insert(comps[idx].begin(), comps[idx].end());
      load[best] += comps[idx].size();
    }
    parts = std::move(bins);
  } else {
    // Fewer components than parts: give every component one part, then grant
    // extra parts to whichever component currently has the largest average
    // part size; partition each component independently.
    std::vector<int> quota(comps.size(), 1);
    for (int extra = k - static_cast<int>(comps.size()); extra > 0; --extra) {
      std::size_t best = 0;
      double best_avg = 0.0;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        const double avg = static_cast<double>(comps[c].size()) / quota[c];
        if (avg > best_avg) {
          best_avg = avg;
          best = c;
        }
      }
      ++quota[best];
    }
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const int kc = std::min<int>(quota[c], static_cast<int>(comps[c].size()));
      auto sub_parts =
          balanced_partition(induced_subgraph(g, comps[c]), kc, params.size_cap());
      for (auto& p : sub_parts) parts.push_back(std::move(p));
    }
  }
  return ClusterSet{sorted_by_smallest(std::move(parts))};
}

double completeness(const ClusterSet& cs, int i) {
  if (i < 0 || i >= static_cast<int>(cs.clusters.size())) {
    throw std::invalid_argument("cluster index out of range");
  }
  const auto& ci = cs.clusters[i];
  if (ci.empty()) return 0.0;
  std::size_t shared = 0;
  for (int j = 0; j < static_cast<int>(cs.clusters.size()); ++j) {
    if (j == i) continue;
    for (NodeId n : cs.clusters[j]) {
      if (ci.count(n)) ++shared;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(ci.size());
}

LostEdgeMap collect_lost_edges(const WeightedGraph& g, const ClusterSet& cs) {
  std::map<NodeId, int> owner;
  for (int i = 0; i < static_cast<int>(cs.clusters.size()); ++i) {
    for (NodeId n : cs.clusters[i]) {
      if (!owner.emplace(n, i).second) {
        throw std::invalid_argument("cluster set is not disjoint");
      }
    }
  }
  LostEdgeMap lost;
  for (const Edge& e : g.edges()) {
    const auto ia = owner.find(e.a);
    const auto ib = owner.find(e.b);
    if (ia == owner.end() || ib == owner.end()) {
      throw std::invalid_argument("cluster set does not cover the graph");
    }
    if (ia->second == ib->second) continue;
    const auto key = std::minmax(ia->second, ib->second);
    // stored oriented: a lives in the first cluster of the key, b in the second
    Edge oriented = e;
    if (ia->second != key.first) std::swap(oriented.a, oriented.b);
    lost.by_pair[{key.first, key.second}].push_back(oriented);
  }
  for (auto& [pair, list] : lost.by_pair) {
    std::sort(list.begin(), list.end(), [](const Edge& x, const Edge& y) {
      if (x.weight != y.weight) return x.weight > y.weight;
      return std::make_pair(x.a, x.b) < std::make_pair(y.a, y.b);
    });
  }
  return lost;
}

namespace {

struct Expander {
  std::vector<std::set<NodeId>> clusters;
  int cap;
  int insertions = 0;

  // Inserts b into the cluster of a and a into the cluster of b, skipping
  // endpoints that are already present or would break the size cap.
  void apply(const Edge& e, int k1, int k2) {
    if (!clusters[k1].count(e.b) && static_cast<int>(clusters[k1].size()) < cap) {
      clusters[k1].insert(e.b);
      ++insertions;
    }
    if (!clusters[k2].count(e.a) && static_cast<int>(clusters[k2].size()) < cap) {
      clusters[k2].insert(e.a);
      ++insertions;
    }
  }
};

}  // namespace

std::pair<ClusterSet, ExpansionReport> expand_clusters(const ClusterSet& cs,
                                                       const LostEdgeMap& lost,
                                                       const ClusteringParams& params) {
  params.validate();
  const int k = static_cast<int>(cs.clusters.size());
  ExpansionReport report;
  report.budget = params.max_random_rounds > 0 ? params.max_random_rounds : 10 * k;

  Expander ex{cs.clusters, params.size_cap()};

  // Cluster graph: nodes are clusters, edge weight is the lost-edge count.
  WeightedGraph cluster_graph;
  for (int i = 0; i < k; ++i) cluster_graph.add_node(i);
  for (const auto& [pair, list] : lost.by_pair) {
    cluster_graph.add_edge(pair.first, pair.second, static_cast<double>(list.size()));
  }

  // Every lost edge is applied at most once across both phases.
  using EdgeRef = std::pair<std::pair<int, int>, std::size_t>;
  std::set<EdgeRef> consumed;

  // Phase 1: along the MaxST (forest for a disconnected cluster graph), apply
  // the top-O_max lost edges of every tree edge.
  for (const auto& comp : connected_components(cluster_graph)) {
    if (comp.size() < 2) continue;
    const Tree maxst = spanning_tree(induced_subgraph(cluster_graph, comp),
                                     SpanningObjective::kMaximize);
    for (const Edge& te : maxst.edges) {
      const auto key = std::make_pair(static_cast<int>(te.a), static_cast<int>(te.b));
      const auto& list = lost.by_pair.at(key);
      const std::size_t take = std::min<std::size_t>(params.o_max, list.size());
      for (std::size_t i = 0; i < take; ++i) {
        ex.apply(list[i], key.first, key.second);
        consumed.insert({key, i});
      }
    }
  }
  report.maxst_insertions = ex.insertions;

  // Phase 2: seeded random fill over the remaining lost edges incident to
  // unsatisfied clusters.
  Rng rng(mix_seed(params.seed, 0xe1f2a7));
  const auto eta_of = [&](int i) { return completeness(ClusterSet{ex.clusters}, i); };
  while (report.rounds_used < report.budget) {
    std::vector<char> unsatisfied(k, 0);
    bool any_unsatisfied = false;
    for (int i = 0; i < k; ++i) {
      if (eta_of(i) < params.tau_c) {
        unsatisfied[i] = 1;
        any_unsatisfied = true;
      }
    }
    if (!any_unsatisfied) break;

    std::vector<EdgeRef> candidates;
    for (const auto& [pair, list] : lost.by_pair) {
      if (!unsatisfied[pair.first] && !unsatisfied[pair.second]) continue;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (!consumed.count({pair, i})) candidates.emplace_back(pair, i);
      }
    }
    if (candidates.empty()) break;

    const EdgeRef pick = candidates[rng.uniform_int(candidates.size())];
    ex.apply(lost.by_pair.at(pick.first)[pick.second], pick.first.first, pick.first.second);
    consumed.insert(pick);
    ++report.rounds_used;
  }

  report.random_insertions = ex.insertions - report.maxst_insertions;
  for (int i = 0; i < k; ++i) {
    if (eta_of(i) < params.tau_c) report.unsatisfied.push_back(i);
  }
  return {ClusterSet{std::move(ex.clusters)}, report};
}

ClusteringResult cluster_images(const WeightedGraph& g, const ClusteringParams& params) {
  params.validate();
  ClusteringResult result;
  ClusterSet cut = cut_images(g, params);
  result.k = static_cast<int>(cut.clusters.size());

  const int cap = params.size_cap();
  for (int i = 0; i < result.k; ++i) {
    if (static_cast<int>(cut.clusters[i].size()) > cap) result.oversize.push_back(i);
  }

  if (result.k > 1) {
    const LostEdgeMap lost = collect_lost_edges(g, cut);
    auto [expanded, report] = expand_clusters(cut, lost, params);
    result.clusters = std::move(expanded);
    result.expansion = std::move(report);
  } else {
    result.clusters = std::move(cut);
  }
  for (int i = 0; i < result.k; ++i) {
    result.eta.push_back(completeness(result.clusters, i));
  }
  return result;
}

}  // namespace parsfm
