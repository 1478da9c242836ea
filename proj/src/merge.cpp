#include "parsfm/merge.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "parsfm/error.hpp"
#include "parsfm/rng.hpp"

namespace parsfm {

namespace {

std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> center_pairs(
    const CorrespondenceSet& corr, bool forward) {
  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> out;
  out.reserve(corr.pairs.size());
  for (const auto& p : corr.pairs) {
    if (forward) {
      out.emplace_back(p.frame1.C, p.frame2.C);
    } else {
      out.emplace_back(p.frame2.C, p.frame1.C);
    }
  }
  return out;
}

}  // namespace

WeightedGraph MergeGraphResult::as_graph() const {
  WeightedGraph g;
  for (int id : cluster_ids) g.add_node(static_cast<NodeId>(id));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    g.add_edge(static_cast<NodeId>(edges[i].k1), static_cast<NodeId>(edges[i].k2),
               edges[i].weight, i);
  }
  return g;
}

MergeGraphResult build_merge_graph(const std::vector<LocalReconstruction>& recons,
                                   const MergeParams& params) {
  if (recons.empty()) throw std::invalid_argument("no reconstructions to merge");

  std::vector<const LocalReconstruction*> sorted;
  for (const auto& r : recons) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->cluster_id < b->cluster_id; });

  MergeGraphResult result;
  for (const auto* r : sorted) result.cluster_ids.push_back(r->cluster_id);

  const int min_common = std::max(3, params.min_common);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const auto& rec1 = *sorted[i];
      const auto& rec2 = *sorted[j];
      const CorrespondenceSet corr = common_correspondences(rec1, rec2);
      if (static_cast<int>(corr.size()) < min_common) continue;

      CorrespondenceSet reversed;
      reversed.pairs.reserve(corr.pairs.size());
      for (const auto& p : corr.pairs) reversed.pairs.push_back({p.frame2, p.frame1});

      RansacParams fwd = params.ransac;
      fwd.seed = mix_seed(params.seed, rec1.cluster_id, rec2.cluster_id);
      RansacParams bwd = params.ransac;
      bwd.seed = mix_seed(params.seed, rec2.cluster_id, rec1.cluster_id);

      MergeEdge edge;
      edge.k1 = rec1.cluster_id;
      edge.k2 = rec2.cluster_id;
      edge.n_common = static_cast<int>(corr.size());
      try {
        const SimilarityEstimate e12 = estimate_similarity(corr, fwd);
        const SimilarityEstimate e21 = estimate_similarity(reversed, bwd);
        edge.t12 = e12.transform;
        edge.inliers = e12.inliers;
        edge.mse12 = mse(e12.transform, center_pairs(corr, true));
        edge.mse21 = mse(e21.transform, center_pairs(corr, false));
        edge.weight = msd(edge.mse12, edge.mse21);
      } catch (const NoConsensusError&) {
        result.failed.emplace_back(rec1.cluster_id, rec2.cluster_id);
        continue;
      }

      // Residuals live in the respective target frames; compare each against
      // the full extent of that frame's reconstruction.
      const double diam2 = camera_bounding_diameter(rec2);
      const double diam1 = camera_bounding_diameter(rec1);
      if (edge.mse12 > params.msd_reject_rel * diam2 ||
          edge.mse21 > params.msd_reject_rel * diam1) {
        edge.rejected = true;
        result.rejected.push_back(std::move(edge));
        continue;
      }
      result.edges.push_back(std::move(edge));
    }
  }
  return result;
}

std::vector<Tree> select_minst(const MergeGraphResult& merge_graph) {
  const WeightedGraph g = merge_graph.as_graph();
  if (g.num_nodes() == 0) throw std::invalid_argument("merge graph is empty");
  std::vector<Tree> trees;
  for (const auto& comp : connected_components(g)) {
    WeightedGraph sub;
    for (NodeId n : comp) sub.add_node(n);
    for (const Edge& e : g.edges()) {
      if (comp.count(e.a) && comp.count(e.b)) sub.add_edge(e.a, e.b, e.weight, e.payload);
    }
    trees.push_back(spanning_tree(sub, SpanningObjective::kMinimize));
  }
  return trees;
}

int find_anchor(const Tree& t, const std::map<int, std::size_t>& sizes) {
  const PeelResult peel = peel_to_center(t);
  if (peel.survivors.size() == 1) return static_cast<int>(peel.survivors[0]);
  const int a = static_cast<int>(peel.survivors[0]);
  const int b = static_cast<int>(peel.survivors[1]);
  const std::size_t size_a = sizes.count(a) ? sizes.at(a) : 0;
  const std::size_t size_b = sizes.count(b) ? sizes.at(b) : 0;
  if (size_a != size_b) return size_a > size_b ? a : b;
  return std::min(a, b);
}

std::map<int, SimilarityTransform> compose_to_anchor(const Tree& t, int anchor,
                                                     const std::vector<MergeEdge>& edges) {
  if (!t.nodes.count(static_cast<NodeId>(anchor))) {
    throw std::invalid_argument("anchor is not a tree node");
  }
  std::map<std::pair<int, int>, const MergeEdge*> by_pair;
  for (const auto& e : edges) by_pair[{std::min(e.k1, e.k2), std::max(e.k1, e.k2)}] = &e;

  const auto adj = t.adjacency();
  std::map<int, SimilarityTransform> to_anchor;
  to_anchor[anchor] = SimilarityTransform::identity();
  std::deque<NodeId> queue{static_cast<NodeId>(anchor)};
  while (!queue.empty()) {
    const NodeId n = queue.front();
    queue.pop_front();
    for (const auto& [m, tree_edge] : adj.at(n)) {
      const int child = static_cast<int>(m);
      if (to_anchor.count(child)) continue;
      const int parent = static_cast<int>(n);
      const auto it = by_pair.find({std::min(child, parent), std::max(child, parent)});
      if (it == by_pair.end()) {
        throw std::logic_error("missing transform for tree edge " + std::to_string(child) +
                               "-" + std::to_string(parent));
      }
      const MergeEdge& me = *it->second;
      // T maps the child frame into the parent frame.
      const SimilarityTransform step =
          me.k1 == child ? me.t12 : me.t12.inverse();
      to_anchor[child] = to_anchor[parent].compose(step);
      queue.push_back(m);
    }
  }
  return to_anchor;
}

namespace {

std::map<int, std::size_t> hops_from_anchor(const Tree& t, int anchor) {
  const auto adj = t.adjacency();
  std::map<int, std::size_t> hops;
  hops[anchor] = 0;
  std::deque<NodeId> queue{static_cast<NodeId>(anchor)};
  while (!queue.empty()) {
    const NodeId n = queue.front();
    queue.pop_front();
    for (const auto& [m, e] : adj.at(n)) {
      const int child = static_cast<int>(m);
      if (hops.count(child)) continue;
      hops[child] = hops.at(static_cast<int>(n)) + 1;
      queue.push_back(m);
    }
  }
  return hops;
}

PointId tagged_point_id(int cluster_id, PointId original) {
  return (static_cast<PointId>(cluster_id) + 1) * (PointId{1} << 32) + original;
}

}  // namespace

MergeOutcome merge_all(const std::vector<LocalReconstruction>& recons,
                       const MergeParams& params) {
  if (recons.empty()) throw std::invalid_argument("no reconstructions to merge");

  std::vector<LocalReconstruction> sorted = recons;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.cluster_id < b.cluster_id; });
  std::map<int, const LocalReconstruction*> by_id;
  std::map<int, std::size_t> sizes;
  for (const auto& r : sorted) {
    if (!by_id.emplace(r.cluster_id, &r).second) {
      throw std::invalid_argument("duplicate cluster id " + std::to_string(r.cluster_id));
    }
    sizes[r.cluster_id] = r.cameras.size();
  }

  MergeOutcome outcome;
  if (sorted.size() == 1) {
    MergedModel single;
    single.model = sorted.front();
    single.plan.minst = make_tree({static_cast<NodeId>(sorted.front().cluster_id)}, {});
    single.plan.anchor = sorted.front().cluster_id;
    single.plan.to_anchor[single.plan.anchor] = SimilarityTransform::identity();
    for (const auto& c : single.model.cameras) {
      single.camera_source[c.image_id] = single.plan.anchor;
    }
    outcome.graph.cluster_ids = {single.plan.anchor};
    outcome.models.push_back(std::move(single));
    return outcome;
  }

  outcome.graph = build_merge_graph(sorted, params);
  const MergeGraphResult& mg = outcome.graph;
  std::vector<Tree> trees = select_minst(mg);

  // Largest component first; ties by smallest cluster id.
  std::stable_sort(trees.begin(), trees.end(), [&](const Tree& a, const Tree& b) {
    std::size_t cams_a = 0, cams_b = 0;
    for (NodeId n : a.nodes) cams_a += sizes.at(static_cast<int>(n));
    for (NodeId n : b.nodes) cams_b += sizes.at(static_cast<int>(n));
    if (cams_a != cams_b) return cams_a > cams_b;
    return *a.nodes.begin() < *b.nodes.begin();
  });

  std::vector<MergedModel>& models = outcome.models;
  for (const Tree& tree : trees) {
    MergedModel out;
    out.plan.minst = tree;
    out.plan.anchor = find_anchor(tree, sizes);
    out.plan.layers = peel_to_center(tree).layers;
    out.plan.to_anchor = compose_to_anchor(tree, out.plan.anchor, mg.edges);
    const auto hops = hops_from_anchor(tree, out.plan.anchor);

    const bool multi = tree.nodes.size() > 1;
    out.model.cluster_id = out.plan.anchor;
    out.model.frame = "anchor-" + std::to_string(out.plan.anchor);

    std::map<ImageId, std::pair<CameraPose, int>> best_camera;
    for (NodeId n : tree.nodes) {
      const int cid = static_cast<int>(n);
      const LocalReconstruction transformed =
          apply_similarity(out.plan.to_anchor.at(cid), *by_id.at(cid));
      for (const auto& cam : transformed.cameras) {
        auto it = best_camera.find(cam.image_id);
        if (it == best_camera.end()) {
          best_camera.emplace(cam.image_id, std::make_pair(cam, cid));
          continue;
        }
        const int held = it->second.second;
        const auto rank = [&](int c) {
          return std::make_tuple(hops.at(c), -static_cast<long long>(sizes.at(c)), c);
        };
        if (rank(cid) < rank(held)) it->second = std::make_pair(cam, cid);
      }
      for (const auto& p : transformed.points) {
        Point3D tagged = p;
        if (multi) tagged.id = tagged_point_id(cid, p.id);
        out.model.points.push_back(std::move(tagged));
      }
    }
    for (auto& [id, entry] : best_camera) {
      out.model.cameras.push_back(entry.first);
      out.camera_source[id] = entry.second;
    }
    std::sort(out.model.points.begin(), out.model.points.end(),
              [](const Point3D& a, const Point3D& b) { return a.id < b.id; });
    models.push_back(std::move(out));
  }
  return outcome;
}

}  // namespace parsfm
