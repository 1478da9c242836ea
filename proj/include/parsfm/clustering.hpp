#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "parsfm/graph.hpp"

namespace parsfm {

struct ClusteringParams {
  int s_max = 100;          // max images per cluster before slack
  double tau_c = 0.7;       // completeness ratio in (0, 1]
  int o_max = 10;           // overlap budget per cluster pair
  double size_slack = 0.3;  // expansion overshoot allowance
  std::uint64_t seed = 0;
  int max_random_rounds = 0;  // 0 selects the default of 10 * K

  void validate() const;
  int size_cap() const;  // floor(s_max * (1 + size_slack))
};

/// Ordered collection of image-id sets. Disjoint after the cut; possibly
/// overlapping after expansion. The union always covers all input images.
struct ClusterSet {
  std::vector<std::set<NodeId>> clusters;

  std::size_t size() const { return clusters.size(); }
  /// For each image, the indices of the clusters containing it.
  std::map<NodeId, std::vector<int>> provenance() const;
};

/// Cross-cluster match edges keyed by unordered cluster pair; per-pair lists
/// sorted by descending weight, ties by node-id pair. Each stored edge is
/// oriented so that `a` lies in the first cluster of its key and `b` in the
/// second.
struct LostEdgeMap {
  std::map<std::pair<int, int>, std::vector<Edge>> by_pair;

  std::size_t total_edges() const;
};

struct ExpansionReport {
  std::vector<int> unsatisfied;  // clusters with eta < tau_c after expansion
  int rounds_used = 0;           // random-phase rounds consumed
  int budget = 0;                // random-phase round budget
  int maxst_insertions = 0;
  int random_insertions = 0;
};

struct ClusteringResult {
  ClusterSet clusters;
  std::vector<double> eta;     // completeness per cluster
  ExpansionReport expansion;
  std::vector<int> oversize;   // clusters exceeding the size cap after the cut
  int k = 0;
};

/// Cuts the image graph into K = max(1, floor(n / s_max)) disjoint clusters
/// via balanced normalized-cut partitioning. Disconnected graphs are
/// partitioned per component and the components grouped into K parts.
ClusterSet cut_images(const WeightedGraph& g, const ClusteringParams& params);

/// Completeness ratio eta(i) = sum_{j != i} |C_i ∩ C_j| / |C_i|.
double completeness(const ClusterSet& cs, int i);

/// Every edge of g crossing the cut, keyed by its cluster pair.
LostEdgeMap collect_lost_edges(const WeightedGraph& g, const ClusterSet& cs);

/// Expansion step: walk the cluster-graph MaxST adding the top-O_max lost
/// edges per tree edge (each endpoint joins the opposite cluster), then fill
/// randomly among edges incident to unsatisfied clusters until the
/// completeness constraint holds or the round budget runs out.
std::pair<ClusterSet, ExpansionReport> expand_clusters(const ClusterSet& cs,
                                                       const LostEdgeMap& lost,
                                                       const ClusteringParams& params);

/// Full clustering: cut, then (when K > 1) lost-edge collection and expansion.
/// Deterministic for a given seed.
ClusteringResult cluster_images(const WeightedGraph& g, const ClusteringParams& params);

}  // namespace parsfm
