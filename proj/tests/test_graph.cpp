#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "parsfm/error.hpp"
#include "parsfm/graph.hpp"
#include "parsfm/rng.hpp"

using namespace parsfm;

namespace {

WeightedGraph triangle() {
  return build_graph({{1, 2, 1.0}, {2, 3, 2.0}, {1, 3, 3.0}});
}

std::set<std::pair<NodeId, NodeId>> edge_pairs(const Tree& t) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (const Edge& e : t.edges) out.emplace(e.a, e.b);
  return out;
}

// Seeded connected random graph with <= max_nodes nodes.
std::pair<WeightedGraph, std::vector<oracle::SimpleEdge>> random_connected_graph(
    std::uint64_t seed, int max_nodes) {
  Rng rng(seed);
  const int n = 2 + static_cast<int>(rng.uniform_int(max_nodes - 1));
  WeightedGraph g;
  std::vector<oracle::SimpleEdge> edges;
  auto add = [&](NodeId a, NodeId b, double w) {
    if (g.find_edge(a, b) != nullptr) return;
    g.add_edge(a, b, w);
    edges.push_back({std::min(a, b), std::max(a, b), w});
  };
  // random spanning chain first, then extra edges
  for (int i = 1; i < n; ++i) {
    const NodeId j = rng.uniform_int(i);
    add(j, i, 1.0 + rng.uniform_int(20));
  }
  const int extra = static_cast<int>(rng.uniform_int(n * 2));
  for (int e = 0; e < extra; ++e) {
    const NodeId a = rng.uniform_int(n);
    const NodeId b = rng.uniform_int(n);
    if (a == b) continue;
    add(a, b, 1.0 + rng.uniform_int(20));
  }
  return {g, edges};
}

Tree random_tree(std::uint64_t seed, int max_nodes) {
  Rng rng(seed);
  const int n = 1 + static_cast<int>(rng.uniform_int(max_nodes));
  std::set<NodeId> nodes;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) nodes.insert(i);
  for (int i = 1; i < n; ++i) {
    const NodeId parent = rng.uniform_int(i);
    edges.push_back(Edge{parent, static_cast<NodeId>(i), 1.0, std::nullopt});
  }
  return make_tree(nodes, edges);
}

}  // namespace

TEST_CASE("build_graph basics") {
  CHECK(build_graph({}).num_nodes() == 0);

  const WeightedGraph dup = build_graph({{1, 2, 5.0}, {2, 1, 3.0}});
  CHECK(dup.num_edges() == 1);
  CHECK(dup.find_edge(1, 2)->weight == 5.0);

  const WeightedGraph tri = triangle();
  CHECK(tri.num_nodes() == 3);
  CHECK(tri.num_edges() == 3);
}

TEST_CASE("build_graph rejects invalid edges") {
  CHECK_THROWS_AS(build_graph({{1, 1, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(build_graph({{1, 2, -1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(build_graph({{1, 2, std::numeric_limits<double>::infinity()}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_graph({{1, 2, std::nan("")}}), std::invalid_argument);
}

TEST_CASE("connected_components") {
  CHECK(connected_components(triangle()) ==
        std::vector<std::set<NodeId>>{{1, 2, 3}});
  CHECK(connected_components(build_graph({{1, 2, 1.0}, {3, 4, 1.0}})) ==
        std::vector<std::set<NodeId>>{{1, 2}, {3, 4}});
  CHECK(connected_components(WeightedGraph{}).empty());
}

TEST_CASE("spanning_tree on the weighted triangle") {
  const WeightedGraph tri = triangle();

  const Tree mn = spanning_tree(tri, SpanningObjective::kMinimize);
  CHECK(edge_pairs(mn) == std::set<std::pair<NodeId, NodeId>>{{1, 2}, {2, 3}});
  CHECK(mn.total_weight() == 3.0);

  const Tree mx = spanning_tree(tri, SpanningObjective::kMaximize);
  CHECK(edge_pairs(mx) == std::set<std::pair<NodeId, NodeId>>{{2, 3}, {1, 3}});
  CHECK(mx.total_weight() == 5.0);
}

TEST_CASE("spanning_tree of a tree returns the same edges") {
  const WeightedGraph path = build_graph({{1, 2, 4.0}, {2, 3, 1.0}});
  for (auto obj : {SpanningObjective::kMinimize, SpanningObjective::kMaximize}) {
    const Tree t = spanning_tree(path, obj);
    CHECK(edge_pairs(t) == std::set<std::pair<NodeId, NodeId>>{{1, 2}, {2, 3}});
  }
}

TEST_CASE("spanning_tree on disconnected graph names components") {
  const WeightedGraph g = build_graph({{1, 2, 1.0}, {3, 4, 1.0}});
  CHECK_THROWS_WITH_AS(spanning_tree(g, SpanningObjective::kMinimize),
                       doctest::Contains("{1,2}"), DisconnectedGraphError);
}

TEST_CASE("spanning_tree of a single node") {
  WeightedGraph g;
  g.add_node(4);
  const Tree t = spanning_tree(g, SpanningObjective::kMinimize);
  CHECK(t.nodes == std::set<NodeId>{4});
  CHECK(t.edges.empty());
}

TEST_CASE("spanning_tree matches brute-force enumeration on seeded graphs") {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const auto [g, edges] = random_connected_graph(seed, 7);
    const auto range = oracle::spanning_tree_weight_range(g.nodes(), edges);
    REQUIRE(range.has_value());
    const Tree mn = spanning_tree(g, SpanningObjective::kMinimize);
    const Tree mx = spanning_tree(g, SpanningObjective::kMaximize);
    CHECK(mn.total_weight() == doctest::Approx(range->first).epsilon(1e-12));
    CHECK(mx.total_weight() == doctest::Approx(range->second).epsilon(1e-12));
  }
}

TEST_CASE("balanced_partition single part") {
  const WeightedGraph tri = triangle();
  const auto parts = balanced_partition(tri, 1);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0] == std::set<NodeId>{1, 2, 3});
}

TEST_CASE("balanced_partition separates two bridged cliques") {
  WeightedGraph g;
  for (NodeId base : {NodeId{0}, NodeId{5}}) {
    for (NodeId i = 0; i < 5; ++i) {
      for (NodeId j = i + 1; j < 5; ++j) g.add_edge(base + i, base + j, 10.0);
    }
  }
  g.add_edge(4, 5, 1.0);
  const auto parts = balanced_partition(g, 2);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0] == std::set<NodeId>{0, 1, 2, 3, 4});
  CHECK(parts[1] == std::set<NodeId>{5, 6, 7, 8, 9});
}

TEST_CASE("balanced_partition splits disconnected components apart") {
  const WeightedGraph g = build_graph(
      {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {10, 11, 1.0}, {11, 12, 1.0}, {10, 12, 1.0}});
  const auto parts = balanced_partition(g, 2);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0] == std::set<NodeId>{0, 1, 2});
  CHECK(parts[1] == std::set<NodeId>{10, 11, 12});
}

TEST_CASE("balanced_partition errors on out-of-range K") {
  CHECK_THROWS_AS(balanced_partition(triangle(), 0), std::invalid_argument);
  CHECK_THROWS_AS(balanced_partition(triangle(), 4), std::invalid_argument);
}

TEST_CASE("balanced_partition honors a feasible part-size cap") {
  // ring of 26 nodes, K=2: uncapped parts may reach ceil(13 * 1.2) = 15,
  // a cap of 14 tightens that whenever 2 * 14 >= 26
  WeightedGraph ring;
  for (NodeId i = 0; i < 26; ++i) ring.add_edge(i, (i + 1) % 26, 5.0);
  for (std::uint64_t shift = 0; shift < 4; ++shift) {
    const auto parts = balanced_partition(ring, 2, 14);
    for (const auto& p : parts) CHECK(p.size() <= 14);
  }
  // an infeasible cap (2 * 10 < 26) is ignored rather than failing
  const auto loose = balanced_partition(ring, 2, 10);
  std::size_t total = 0;
  for (const auto& p : loose) total += p.size();
  CHECK(total == 26);
}

TEST_CASE("balanced_partition is a disjoint exact cover with bounded sizes") {
  for (std::uint64_t seed = 200; seed < 240; ++seed) {
    const auto [g, edges] = random_connected_graph(seed, 30);
    const int n = static_cast<int>(g.num_nodes());
    const int k = 1 + static_cast<int>(seed % std::min(n, 5));
    const auto parts = balanced_partition(g, k);
    REQUIRE(static_cast<int>(parts.size()) == k);
    std::set<NodeId> all;
    std::size_t total = 0;
    const int lo = std::max(1, static_cast<int>(std::ceil((n / k) * 0.8)));
    const int hi = std::max(
        1, static_cast<int>(std::floor(std::ceil(static_cast<double>(n) / k) * 1.2)));
    for (const auto& p : parts) {
      CHECK(!p.empty());
      CHECK(static_cast<int>(p.size()) >= lo);
      CHECK(static_cast<int>(p.size()) <= hi);
      total += p.size();
      all.insert(p.begin(), p.end());
    }
    CHECK(all == g.nodes());
    CHECK(total == g.num_nodes());
  }
}

TEST_CASE("peel_to_center examples") {
  // path a-b-c with ids 1-2-3
  const Tree path = make_tree({1, 2, 3}, {Edge{1, 2, 1.0, {}}, Edge{2, 3, 1.0, {}}});
  const PeelResult pr = peel_to_center(path);
  CHECK(pr.survivors == std::vector<NodeId>{2});
  REQUIRE(pr.layers.size() == 1);
  CHECK(pr.layers[0] == std::set<NodeId>{1, 3});

  const Tree single = make_tree({7}, {});
  const PeelResult ps = peel_to_center(single);
  CHECK(ps.survivors == std::vector<NodeId>{7});
  CHECK(ps.layers.empty());

  // star centered at 0
  const Tree star = make_tree({0, 1, 2, 3, 4}, {Edge{0, 1, 1.0, {}}, Edge{0, 2, 1.0, {}},
                                                Edge{0, 3, 1.0, {}}, Edge{0, 4, 1.0, {}}});
  CHECK(peel_to_center(star).survivors == std::vector<NodeId>{0});
}

TEST_CASE("tree_height examples and errors") {
  const Tree path = make_tree({1, 2, 3}, {Edge{1, 2, 1.0, {}}, Edge{2, 3, 1.0, {}}});
  CHECK(tree_height(path, 1) == 2);
  CHECK(tree_height(path, 2) == 1);
  CHECK(tree_height(make_tree({5}, {}), 5) == 0);
  CHECK_THROWS_AS(tree_height(path, 9), std::invalid_argument);
}

TEST_CASE("peel_to_center survivors minimize rooted height on seeded trees") {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const Tree t = random_tree(seed, 12);
    std::vector<oracle::SimpleEdge> edges;
    for (const Edge& e : t.edges) edges.push_back({e.a, e.b, e.weight});
    const std::size_t best = oracle::min_rooted_height(t.nodes, edges);
    const PeelResult pr = peel_to_center(t);
    REQUIRE(pr.survivors.size() >= 1);
    REQUIRE(pr.survivors.size() <= 2);
    for (NodeId s : pr.survivors) {
      CHECK(tree_height(t, s) == best);
      CHECK(oracle::rooted_height(t.nodes, edges, s) == best);
    }
  }
}

TEST_CASE("make_tree validates invariants") {
  CHECK_THROWS_AS(make_tree({1, 2, 3}, {Edge{1, 2, 1.0, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(make_tree({1, 2, 3}, {Edge{1, 2, 1.0, {}}, Edge{2, 1, 1.0, {}}}),
                  std::invalid_argument);
}
