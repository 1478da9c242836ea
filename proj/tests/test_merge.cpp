#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "parsfm/merge.hpp"
#include "parsfm/rng.hpp"
#include "parsfm/simulator.hpp"

using namespace parsfm;

namespace {

SimilarityTransform random_similarity(Rng& rng) {
  SimilarityTransform t;
  t.s = rng.uniform(0.5, 2.0);
  t.q = rng.rotation();
  t.t = rng.uniform_box(Eigen::Vector3d::Constant(-5.0), Eigen::Vector3d::Constant(5.0));
  return t;
}

// Shared world: cameras on a ring. Each cluster sees a contiguous id range
// and expresses it in its own random gauge (world -> local).
struct SyntheticWorld {
  std::vector<CameraPose> world;
  std::vector<SimilarityTransform> gauges;
  std::vector<LocalReconstruction> recons;

  SyntheticWorld(int n_cameras, const std::vector<std::pair<int, int>>& ranges,
                 std::uint64_t seed) {
    Rng rng(seed);
    for (int i = 0; i < n_cameras; ++i) {
      const double a = 2.0 * M_PI * i / n_cameras;
      world.emplace_back(static_cast<ImageId>(i), rng.rotation(),
                         Eigen::Vector3d(10.0 * std::cos(a), 10.0 * std::sin(a),
                                         rng.uniform(-1.0, 1.0)));
    }
    for (std::size_t c = 0; c < ranges.size(); ++c) {
      const SimilarityTransform gauge = random_similarity(rng);
      gauges.push_back(gauge);
      LocalReconstruction rec;
      rec.cluster_id = static_cast<int>(c);
      for (int i = ranges[c].first; i < ranges[c].second; ++i) {
        const CameraPose& w = world[i % world.size()];
        rec.cameras.emplace_back(w.image_id, (w.q * gauge.q.conjugate()).normalized(),
                                 gauge.apply(w.C));
      }
      recons.push_back(std::move(rec));
    }
  }
};

MergeParams default_params() {
  MergeParams p;
  p.seed = 9;
  return p;
}

}  // namespace

TEST_CASE("build_merge_graph connects clusters sharing enough cameras") {
  // 2 clusters, 10 common cameras, exact gauges -> one near-zero edge
  SyntheticWorld w(30, {{0, 20}, {10, 30}}, 1);
  const MergeGraphResult mg = build_merge_graph(w.recons, default_params());
  REQUIRE(mg.edges.size() == 1);
  CHECK(mg.edges[0].n_common == 10);
  CHECK(mg.edges[0].weight < 1e-9);
  CHECK(mg.failed.empty());

  // the estimated transform equals the analytic gauge ratio
  const SimilarityTransform expected = w.gauges[1].compose(w.gauges[0].inverse());
  CHECK(std::abs(mg.edges[0].t12.s - expected.s) / expected.s < 1e-9);
  CHECK(rotation_angle(mg.edges[0].t12.q, expected.q) < 1e-9);
}

TEST_CASE("build_merge_graph skips pairs below the common-camera floor") {
  for (int overlap : {0, 1, 2}) {
    SyntheticWorld w(40, {{0, 20}, {20 - overlap, 40 - overlap}}, 2);
    const MergeGraphResult mg = build_merge_graph(w.recons, default_params());
    CHECK(mg.edges.empty());
  }
}

TEST_CASE("build_merge_graph pairwise symmetric weights") {
  SyntheticWorld w(30, {{0, 14}, {10, 24}, {20, 34}}, 3);
  const MergeGraphResult mg = build_merge_graph(w.recons, default_params());
  CHECK(mg.edges.size() <= 3);
  for (const auto& e : mg.edges) {
    CHECK(e.weight == msd(e.mse12, e.mse21));
    CHECK(e.weight == msd(e.mse21, e.mse12));
  }
}

TEST_CASE("select_minst keeps the lightest edges") {
  MergeGraphResult mg;
  mg.cluster_ids = {0, 1, 2};
  auto edge = [](int a, int b, double w) {
    MergeEdge e;
    e.k1 = a;
    e.k2 = b;
    e.weight = w;
    return e;
  };
  mg.edges = {edge(0, 1, 0.1), edge(1, 2, 0.2), edge(0, 2, 5.0)};
  const std::vector<Tree> trees = select_minst(mg);
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].total_weight() == doctest::Approx(0.3));

  // already a tree: unchanged
  mg.edges = {edge(0, 1, 0.5), edge(1, 2, 0.7)};
  const std::vector<Tree> same = select_minst(mg);
  REQUIRE(same.size() == 1);
  CHECK(same[0].edges.size() == 2);

  // two components: two trees
  mg.cluster_ids = {0, 1, 2, 3};
  mg.edges = {edge(0, 1, 0.5), edge(2, 3, 0.7)};
  CHECK(select_minst(mg).size() == 2);
}

TEST_CASE("find_anchor follows leaf peeling and the size tie-break") {
  // star edges c0-c1, c2-c1, c1-c3, c4-c3 with |c1| > |c3|
  const Tree t = make_tree({0, 1, 2, 3, 4},
                           {Edge{0, 1, 0.1, {}}, Edge{1, 2, 0.1, {}}, Edge{1, 3, 0.1, {}},
                            Edge{3, 4, 0.1, {}}});
  std::map<int, std::size_t> sizes{{0, 10}, {1, 30}, {2, 10}, {3, 20}, {4, 10}};
  CHECK(find_anchor(t, sizes) == 1);
  sizes[3] = 40;
  CHECK(find_anchor(t, sizes) == 3);

  // path of three equal-size nodes: the middle one
  const Tree path = make_tree({0, 1, 2}, {Edge{0, 1, 1.0, {}}, Edge{1, 2, 1.0, {}}});
  std::map<int, std::size_t> equal{{0, 5}, {1, 5}, {2, 5}};
  CHECK(find_anchor(path, equal) == 1);

  // single cluster: itself
  CHECK(find_anchor(make_tree({7}, {}), {{7, 3}}) == 7);
}

TEST_CASE("compose_to_anchor composes along tree paths") {
  Rng rng(17);
  // chain 0 - 1 - 2 with known transforms; anchor 2
  std::vector<MergeEdge> edges(2);
  edges[0].k1 = 0;
  edges[0].k2 = 1;
  edges[0].t12 = random_similarity(rng);
  edges[1].k1 = 1;
  edges[1].k2 = 2;
  edges[1].t12 = random_similarity(rng);
  const Tree chain = make_tree({0, 1, 2}, {Edge{0, 1, 0.1, {}}, Edge{1, 2, 0.1, {}}});

  const auto to_anchor = compose_to_anchor(chain, 2, edges);
  CHECK(to_anchor.at(2).s == 1.0);
  CHECK(to_anchor.at(2).t.norm() == 0.0);

  const SimilarityTransform expected = edges[1].t12.compose(edges[0].t12);
  const Eigen::Vector3d x(0.3, -1.0, 2.0);
  CHECK((to_anchor.at(0).apply(x) - expected.apply(x)).norm() < 1e-12);
  CHECK((to_anchor.at(1).apply(x) - edges[1].t12.apply(x)).norm() < 1e-12);

  CHECK_THROWS_AS(compose_to_anchor(chain, 9, edges), std::invalid_argument);
}

TEST_CASE("compose_to_anchor maps every cluster onto the anchor frame") {
  // random tree over 6 clusters with exact synthetic gauges
  Rng rng(23);
  std::vector<SimilarityTransform> gauges(6);
  for (auto& g : gauges) g = random_similarity(rng);

  std::vector<Edge> tree_edges;
  std::vector<MergeEdge> merge_edges;
  for (int child = 1; child < 6; ++child) {
    const int parent = static_cast<int>(rng.uniform_int(child));
    MergeEdge e;
    e.k1 = std::min(child, parent);
    e.k2 = std::max(child, parent);
    e.t12 = gauges[e.k2].compose(gauges[e.k1].inverse());
    merge_edges.push_back(e);
    tree_edges.push_back(Edge{static_cast<NodeId>(e.k1), static_cast<NodeId>(e.k2),
                              1.0, {}});
  }
  const Tree t = make_tree({0, 1, 2, 3, 4, 5}, tree_edges);
  const int anchor = 3;
  const auto to_anchor = compose_to_anchor(t, anchor, merge_edges);
  for (int c = 0; c < 6; ++c) {
    const SimilarityTransform expected = gauges[anchor].compose(gauges[c].inverse());
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::Vector3d x = rng.uniform_box(Eigen::Vector3d::Constant(-3.0),
                                                Eigen::Vector3d::Constant(3.0));
      CHECK((to_anchor.at(c).apply(x) - expected.apply(x)).norm() < 1e-9);
    }
  }
}

TEST_CASE("merge_all keeps a single reconstruction unchanged") {
  SyntheticWorld w(12, {{0, 12}}, 31);
  const MergeOutcome outcome = merge_all(w.recons, default_params());
  REQUIRE(outcome.models.size() == 1);
  CHECK(outcome.models[0].plan.anchor == 0);
  CHECK(outcome.models[0].model.cameras.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK((outcome.models[0].model.cameras[i].C - w.recons[0].cameras[i].C).norm() == 0.0);
  }
}

TEST_CASE("merge_all aligns two exactly-gauged clusters") {
  SyntheticWorld w(40, {{0, 25}, {15, 40}}, 37);
  const MergeOutcome outcome = merge_all(w.recons, default_params());
  REQUIRE(outcome.models.size() == 1);
  const LocalReconstruction& merged = outcome.models[0].model;
  CHECK(merged.cameras.size() == 40);

  // merged equals ground truth after one global similarity (the anchor gauge)
  const SimilarityTransform anchor_gauge = w.gauges[outcome.models[0].plan.anchor];
  for (const auto& cam : merged.cameras) {
    const Eigen::Vector3d expected = anchor_gauge.apply(w.world[cam.image_id].C);
    CHECK((cam.C - expected).norm() < 1e-9 * (1.0 + expected.norm()));
  }
}

TEST_CASE("merge_all avoids a corrupted edge via the MinST") {
  // triangle of clusters sharing 6 cameras per pair; corrupt half of cluster
  // 2's copies of the cameras it shares with cluster 0, so that pair still
  // reaches consensus but carries a huge residual weight
  SyntheticWorld w(42, {{0, 20}, {14, 34}, {28, 48}}, 41);
  MergeParams params = default_params();
  params.msd_reject_rel = 1e9;  // keep all edges; the MinST must dodge the bad one

  for (auto& cam : w.recons[2].cameras) {
    if (cam.image_id < 3) {
      cam = CameraPose(cam.image_id, cam.q,
                       cam.C + Eigen::Vector3d(30.0 + 7.0 * cam.image_id, -20.0, 50.0));
    }
  }
  const MergeOutcome outcome = merge_all(w.recons, params);
  REQUIRE(outcome.models.size() == 1);
  REQUIRE(outcome.graph.edges.size() == 3);

  double w01 = 0, w12 = 0, w02 = 0;
  for (const auto& e : outcome.graph.edges) {
    if (e.k1 == 0 && e.k2 == 1) w01 = e.weight;
    if (e.k1 == 1 && e.k2 == 2) w12 = e.weight;
    if (e.k1 == 0 && e.k2 == 2) w02 = e.weight;
  }
  CHECK(w02 > w01);
  CHECK(w02 > w12);
  for (const Edge& e : outcome.models[0].plan.minst.edges) {
    CHECK(!(e.a == 0 && e.b == 2));
  }
}

TEST_CASE("merge_all union covers every camera exactly once") {
  SyntheticWorld w(50, {{0, 22}, {16, 38}, {32, 54}}, 43);
  const MergeOutcome outcome = merge_all(w.recons, default_params());
  std::set<ImageId> all_inputs;
  for (const auto& rec : w.recons) {
    for (const auto& cam : rec.cameras) all_inputs.insert(cam.image_id);
  }
  std::set<ImageId> merged_ids;
  std::size_t total = 0;
  for (const auto& model : outcome.models) {
    for (const auto& cam : model.model.cameras) {
      merged_ids.insert(cam.image_id);
      ++total;
    }
  }
  CHECK(merged_ids == all_inputs);
  CHECK(total == merged_ids.size());
}

TEST_CASE("merge_all is gauge equivariant") {
  Rng rng(47);
  const SyntheticWorld w(40, {{0, 25}, {15, 40}}, 53);
  const MergeOutcome base = merge_all(w.recons, default_params());

  // re-gauge the shared world and rebuild every cluster with the same gauges
  const SimilarityTransform global = random_similarity(rng);
  SyntheticWorld regauged = w;
  for (std::size_t c = 0; c < w.recons.size(); ++c) {
    LocalReconstruction rec;
    rec.cluster_id = static_cast<int>(c);
    for (const auto& cam : w.recons[c].cameras) {
      const CameraPose& world_cam = w.world[cam.image_id];
      const CameraPose moved(world_cam.image_id,
                             (world_cam.q * global.q.conjugate()).normalized(),
                             global.apply(world_cam.C));
      rec.cameras.emplace_back(moved.image_id,
                               (moved.q * w.gauges[c].q.conjugate()).normalized(),
                               w.gauges[c].apply(moved.C));
    }
    regauged.recons[c] = std::move(rec);
  }
  const MergeOutcome moved = merge_all(regauged.recons, default_params());

  // both merges live in some anchor frame; align one onto the other
  std::vector<Eigen::Vector3d> src, dst;
  std::map<ImageId, Eigen::Vector3d> base_centers;
  for (const auto& cam : base.models[0].model.cameras) base_centers[cam.image_id] = cam.C;
  for (const auto& cam : moved.models[0].model.cameras) {
    src.push_back(cam.C);
    dst.push_back(base_centers.at(cam.image_id));
  }
  const SimilarityTransform align = fit_similarity(src, dst);
  double rmse = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    rmse += (align.apply(src[i]) - dst[i]).squaredNorm();
  }
  rmse = std::sqrt(rmse / src.size());
  CHECK(rmse < 1e-9 * bounding_diameter(dst));
}

TEST_CASE("merge_all is independent of input order") {
  SyntheticWorld w(45, {{0, 20}, {14, 34}, {28, 48}}, 59);
  const MergeOutcome forward = merge_all(w.recons, default_params());
  std::vector<LocalReconstruction> reversed(w.recons.rbegin(), w.recons.rend());
  const MergeOutcome backward = merge_all(reversed, default_params());
  REQUIRE(forward.models.size() == backward.models.size());
  for (std::size_t m = 0; m < forward.models.size(); ++m) {
    const auto& a = forward.models[m].model.cameras;
    const auto& b = backward.models[m].model.cameras;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].image_id == b[i].image_id);
      CHECK((a[i].C - b[i].C).norm() == 0.0);
    }
  }
}

TEST_CASE("minst weight optimality against brute force") {
  Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(5));  // up to 7 clusters
    MergeGraphResult mg;
    std::vector<oracle::SimpleEdge> simple;
    std::set<NodeId> nodes;
    for (int i = 0; i < n; ++i) {
      mg.cluster_ids.push_back(i);
      nodes.insert(i);
    }
    // random connected weight pattern
    for (int i = 1; i < n; ++i) {
      const int j = static_cast<int>(rng.uniform_int(i));
      MergeEdge e;
      e.k1 = j;
      e.k2 = i;
      e.weight = rng.uniform(0.0, 2.0);
      mg.edges.push_back(e);
      simple.push_back({static_cast<NodeId>(j), static_cast<NodeId>(i), e.weight});
    }
    for (int extra = 0; extra < n; ++extra) {
      const int a = static_cast<int>(rng.uniform_int(n));
      const int b = static_cast<int>(rng.uniform_int(n));
      if (a == b) continue;
      bool exists = false;
      for (const auto& e : mg.edges) {
        if ((e.k1 == std::min(a, b)) && (e.k2 == std::max(a, b))) exists = true;
      }
      if (exists) continue;
      MergeEdge e;
      e.k1 = std::min(a, b);
      e.k2 = std::max(a, b);
      e.weight = rng.uniform(0.0, 2.0);
      mg.edges.push_back(e);
      simple.push_back({static_cast<NodeId>(e.k1), static_cast<NodeId>(e.k2), e.weight});
    }
    const auto range = oracle::spanning_tree_weight_range(nodes, simple);
    REQUIRE(range.has_value());
    const std::vector<Tree> trees = select_minst(mg);
    REQUIRE(trees.size() == 1);
    CHECK(trees[0].total_weight() == doctest::Approx(range->first).epsilon(1e-12));
  }
}

TEST_CASE("anchor height optimality on seeded trees") {
  Rng rng(67);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(12));
    std::set<NodeId> nodes;
    std::vector<Edge> edges;
    std::vector<oracle::SimpleEdge> simple;
    std::map<int, std::size_t> sizes;
    for (int i = 0; i < n; ++i) {
      nodes.insert(i);
      sizes[i] = 1 + rng.uniform_int(40);
    }
    for (int i = 1; i < n; ++i) {
      const NodeId p = rng.uniform_int(i);
      edges.push_back(Edge{p, static_cast<NodeId>(i), 1.0, {}});
      simple.push_back({p, static_cast<NodeId>(i), 1.0});
    }
    const Tree t = make_tree(nodes, edges);
    const int anchor = find_anchor(t, sizes);
    CHECK(oracle::rooted_height(nodes, simple, anchor) ==
          oracle::min_rooted_height(nodes, simple));
  }
}
