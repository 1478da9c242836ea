#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "parsfm/graph.hpp"
#include "parsfm/reconstruction.hpp"
#include "parsfm/sim3.hpp"

namespace parsfm {

struct MergeParams {
  RansacParams ransac;
  double msd_reject_rel = 0.05;  // directed-residual cap, relative to the target frame
  int min_common = 3;            // common cameras required to attempt an edge
  std::uint64_t seed = 0;
};

/// Cluster-pair registration: forward transform, inliers of both directions,
/// and the symmetric MSD used as the spanning-tree weight.
struct MergeEdge {
  int k1 = 0;
  int k2 = 0;
  SimilarityTransform t12;  // frame k1 -> frame k2
  std::vector<ImageId> inliers;
  double mse12 = 0.0;
  double mse21 = 0.0;
  double weight = 0.0;  // msd(mse12, mse21)
  int n_common = 0;
  bool rejected = false;  // true when the residual exceeded the rejection cap
};

struct MergeGraphResult {
  std::vector<int> cluster_ids;
  std::vector<MergeEdge> edges;          // kept edges
  std::vector<MergeEdge> rejected;       // evaluated but above the rejection cap
  std::vector<std::pair<int, int>> failed;  // pairs where RANSAC found no consensus

  WeightedGraph as_graph() const;  // nodes = cluster ids, payload = edge index
};

struct MergePlan {
  Tree minst;
  int anchor = 0;
  std::map<int, SimilarityTransform> to_anchor;
  std::vector<std::set<NodeId>> layers;  // leaf-peeling record
};

struct MergedModel {
  LocalReconstruction model;        // merged cameras + points in the anchor frame
  MergePlan plan;
  std::map<ImageId, int> camera_source;  // winning cluster per image id
};

/// Estimates both directed similarity transforms for every cluster pair with
/// at least min_common shared cameras; an edge is kept only when both succeed
/// and its directed residuals stay below the rejection cap.
MergeGraphResult build_merge_graph(const std::vector<LocalReconstruction>& recons,
                                   const MergeParams& params);

/// Minimum spanning tree per connected component, components ordered by
/// smallest cluster id.
std::vector<Tree> select_minst(const MergeGraphResult& merge_graph);

/// Anchor cluster: leaf-peeling survivor; of two survivors the one with more
/// cameras wins (ties: smaller cluster id).
int find_anchor(const Tree& t, const std::map<int, std::size_t>& sizes);

/// Composition of edge transforms along the unique tree path to the anchor;
/// the anchor maps to identity.
std::map<int, SimilarityTransform> compose_to_anchor(const Tree& t, int anchor,
                                                     const std::vector<MergeEdge>& edges);

struct MergeOutcome {
  std::vector<MergedModel> models;  // one per component, largest first
  MergeGraphResult graph;           // evaluated edges, for audit
};

/// Full merge: build graph, MinST, anchor, compose, transform, and union.
/// One output model per merge-graph component, largest first. A camera held by
/// several clusters keeps the copy nearest the anchor in tree hops (ties:
/// larger cluster, then smaller cluster id). Multi-cluster models tag point
/// ids with the source cluster.
MergeOutcome merge_all(const std::vector<LocalReconstruction>& recons,
                       const MergeParams& params);

}  // namespace parsfm
