#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "parsfm/clustering.hpp"
#include "parsfm/error.hpp"
#include "parsfm/graph.hpp"
#include "parsfm/io.hpp"
#include "parsfm/merge.hpp"
#include "parsfm/pipeline.hpp"
#include "parsfm/rng.hpp"
#include "parsfm/sim3.hpp"
#include "parsfm/simulator.hpp"

namespace py = pybind11;
using namespace parsfm;

namespace {

Eigen::Vector4d quat_coeffs(const Eigen::Quaterniond& q) {
  return {q.w(), q.x(), q.y(), q.z()};
}

Eigen::Quaterniond quat_from(const Eigen::Vector4d& wxyz) {
  return Eigen::Quaterniond(wxyz(0), wxyz(1), wxyz(2), wxyz(3));
}

void bind_graph(py::module_& m) {
  py::class_<Edge>(m, "Edge")
      .def_readonly("a", &Edge::a)
      .def_readonly("b", &Edge::b)
      .def_readonly("weight", &Edge::weight)
      .def("__repr__", [](const Edge& e) {
        return "Edge(" + std::to_string(e.a) + ", " + std::to_string(e.b) + ", " +
               std::to_string(e.weight) + ")";
      });

  py::class_<WeightedGraph>(m, "WeightedGraph")
      .def(py::init<>())
      .def("add_node", &WeightedGraph::add_node)
      .def("add_edge",
           [](WeightedGraph& g, NodeId a, NodeId b, double w) { g.add_edge(a, b, w); })
      .def("num_nodes", &WeightedGraph::num_nodes)
      .def("num_edges", &WeightedGraph::num_edges)
      .def("nodes", [](const WeightedGraph& g) {
        return std::vector<NodeId>(g.nodes().begin(), g.nodes().end());
      })
      .def("edges", &WeightedGraph::edges);

  py::class_<Tree>(m, "Tree")
      .def_readonly("edges", &Tree::edges)
      .def("nodes", [](const Tree& t) {
        return std::vector<NodeId>(t.nodes.begin(), t.nodes.end());
      })
      .def("total_weight", &Tree::total_weight);

  py::enum_<SpanningObjective>(m, "SpanningObjective")
      .value("MINIMIZE", SpanningObjective::kMinimize)
      .value("MAXIMIZE", SpanningObjective::kMaximize);

  m.def("build_graph", &build_graph, py::arg("edges"),
        "Build a weighted undirected graph from (a, b, weight) tuples.");
  m.def("connected_components", [](const WeightedGraph& g) {
    std::vector<std::vector<NodeId>> out;
    for (const auto& comp : connected_components(g)) {
      out.emplace_back(comp.begin(), comp.end());
    }
    return out;
  });
  m.def("spanning_tree", &spanning_tree, py::arg("graph"), py::arg("objective"));
  m.def(
      "balanced_partition",
      [](const WeightedGraph& g, int k, int max_part) {
        std::vector<std::vector<NodeId>> out;
        for (const auto& part : balanced_partition(g, k, max_part)) {
          out.emplace_back(part.begin(), part.end());
        }
        return out;
      },
      py::arg("graph"), py::arg("k"), py::arg("max_part") = 0);
  m.def("tree_height", &tree_height, py::arg("tree"), py::arg("root"));
  m.def(
      "peel_to_center",
      [](const Tree& t) {
        const PeelResult r = peel_to_center(t);
        std::vector<std::vector<NodeId>> layers;
        for (const auto& layer : r.layers) layers.emplace_back(layer.begin(), layer.end());
        return py::make_tuple(r.survivors, layers);
      },
      py::arg("tree"));
}

void bind_geometry(py::module_& m) {
  py::class_<CameraPose>(m, "CameraPose")
      .def(py::init([](ImageId id, const Eigen::Vector4d& q, const Eigen::Vector3d& c) {
             return CameraPose(id, quat_from(q), c);
           }),
           py::arg("image_id"), py::arg("q"), py::arg("C"))
      .def_readonly("image_id", &CameraPose::image_id)
      .def_property_readonly("q", [](const CameraPose& p) { return quat_coeffs(p.q); })
      .def_property_readonly("C", [](const CameraPose& p) { return p.C; })
      .def("view_direction", &CameraPose::view_direction);

  py::class_<Point3D>(m, "Point3D")
      .def_readonly("id", &Point3D::id)
      .def_readonly("xyz", &Point3D::xyz)
      .def_readonly("observations", &Point3D::observations);

  py::class_<LocalReconstruction>(m, "LocalReconstruction")
      .def(py::init<>())
      .def_readwrite("cluster_id", &LocalReconstruction::cluster_id)
      .def_readwrite("frame", &LocalReconstruction::frame)
      .def_readwrite("cameras", &LocalReconstruction::cameras)
      .def_readwrite("points", &LocalReconstruction::points)
      .def("size", &LocalReconstruction::size);

  py::class_<SimilarityTransform>(m, "SimilarityTransform")
      .def(py::init([](double s, const Eigen::Vector4d& q, const Eigen::Vector3d& t) {
             SimilarityTransform out;
             out.s = s;
             out.q = quat_from(q).normalized();
             out.t = t;
             return out;
           }),
           py::arg("s") = 1.0, py::arg("q") = Eigen::Vector4d(1, 0, 0, 0),
           py::arg("t") = Eigen::Vector3d::Zero())
      .def_readonly("s", &SimilarityTransform::s)
      .def_property_readonly("q",
                             [](const SimilarityTransform& t) { return quat_coeffs(t.q); })
      .def_readonly("t", &SimilarityTransform::t)
      .def("apply", &SimilarityTransform::apply)
      .def("compose", &SimilarityTransform::compose)
      .def("inverse", &SimilarityTransform::inverse);

  py::class_<CorrespondenceSet>(m, "CorrespondenceSet")
      .def(py::init<>())
      .def("size", &CorrespondenceSet::size)
      .def("add", [](CorrespondenceSet& corr, const CameraPose& a, const CameraPose& b) {
        corr.pairs.push_back({a, b});
      });

  py::class_<RansacParams>(m, "RansacParams")
      .def(py::init<>())
      .def_readwrite("threshold_rel", &RansacParams::threshold_rel)
      .def_readwrite("max_iters", &RansacParams::max_iters)
      .def_readwrite("confidence", &RansacParams::confidence)
      .def_readwrite("min_inliers", &RansacParams::min_inliers)
      .def_readwrite("seed", &RansacParams::seed);

  py::class_<SimilarityEstimate>(m, "SimilarityEstimate")
      .def_readonly("transform", &SimilarityEstimate::transform)
      .def_readonly("inliers", &SimilarityEstimate::inliers)
      .def_readonly("iterations", &SimilarityEstimate::iterations)
      .def_readonly("refit_accepted", &SimilarityEstimate::refit_accepted);

  m.def("common_correspondences", &common_correspondences);
  m.def("relative_scale", &relative_scale);
  m.def("estimate_similarity", &estimate_similarity, py::arg("correspondences"),
        py::arg("params") = RansacParams{});
  m.def("apply_similarity", &apply_similarity);
  m.def("mse", &mse, py::arg("transform"), py::arg("pairs"));
  m.def("msd", &msd);
}

void bind_pipeline(py::module_& m) {
  py::enum_<Layout>(m, "Layout")
      .value("ORBIT", Layout::kOrbit)
      .value("GRID", Layout::kGrid)
      .value("STREET", Layout::kStreet);

  py::class_<GroundTruthScene>(m, "GroundTruthScene")
      .def_readonly("cameras", &GroundTruthScene::cameras)
      .def_readonly("points", &GroundTruthScene::points)
      .def_readonly("diameter", &GroundTruthScene::diameter)
      .def_readonly("seed", &GroundTruthScene::seed);

  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<>())
      .def_readwrite("sigma_center", &NoiseModel::sigma_center)
      .def_readwrite("sigma_rot_deg", &NoiseModel::sigma_rot_deg)
      .def_readwrite("outlier_fraction", &NoiseModel::outlier_fraction);

  py::class_<SyntheticSolve>(m, "SyntheticSolve")
      .def_readonly("recon", &SyntheticSolve::recon)
      .def_readonly("gauge", &SyntheticSolve::gauge)
      .def_readonly("outlier_ids", &SyntheticSolve::outlier_ids);

  py::class_<GtMetrics>(m, "GtMetrics")
      .def_readonly("rmse_frac", &GtMetrics::rmse_frac)
      .def_readonly("mean_rot_deg", &GtMetrics::mean_rot_deg)
      .def_readonly("max_rot_deg", &GtMetrics::max_rot_deg)
      .def_readonly("cameras", &GtMetrics::cameras)
      .def_readonly("fraction", &GtMetrics::fraction);

  py::class_<ClusteringParams>(m, "ClusteringParams")
      .def(py::init<>())
      .def_readwrite("s_max", &ClusteringParams::s_max)
      .def_readwrite("tau_c", &ClusteringParams::tau_c)
      .def_readwrite("o_max", &ClusteringParams::o_max)
      .def_readwrite("size_slack", &ClusteringParams::size_slack)
      .def_readwrite("seed", &ClusteringParams::seed)
      .def_readwrite("max_random_rounds", &ClusteringParams::max_random_rounds);

  py::class_<ClusteringResult>(m, "ClusteringResult")
      .def_property_readonly("clusters",
                             [](const ClusteringResult& r) {
                               std::vector<std::vector<NodeId>> out;
                               for (const auto& c : r.clusters.clusters) {
                                 out.emplace_back(c.begin(), c.end());
                               }
                               return out;
                             })
      .def_readonly("eta", &ClusteringResult::eta)
      .def_readonly("k", &ClusteringResult::k)
      .def_property_readonly("unsatisfied", [](const ClusteringResult& r) {
        return r.expansion.unsatisfied;
      });

  py::class_<MergeParams>(m, "MergeParams")
      .def(py::init<>())
      .def_readwrite("ransac", &MergeParams::ransac)
      .def_readwrite("msd_reject_rel", &MergeParams::msd_reject_rel)
      .def_readwrite("min_common", &MergeParams::min_common)
      .def_readwrite("seed", &MergeParams::seed);

  py::class_<MergeEdge>(m, "MergeEdge")
      .def_readonly("k1", &MergeEdge::k1)
      .def_readonly("k2", &MergeEdge::k2)
      .def_readonly("t12", &MergeEdge::t12)
      .def_readonly("weight", &MergeEdge::weight)
      .def_readonly("n_common", &MergeEdge::n_common)
      .def_readonly("inliers", &MergeEdge::inliers);

  py::class_<MergePlan>(m, "MergePlan")
      .def_readonly("anchor", &MergePlan::anchor)
      .def_readonly("minst", &MergePlan::minst)
      .def_readonly("to_anchor", &MergePlan::to_anchor);

  py::class_<MergedModel>(m, "MergedModel")
      .def_readonly("model", &MergedModel::model)
      .def_readonly("plan", &MergedModel::plan)
      .def_readonly("camera_source", &MergedModel::camera_source);

  py::class_<MergeOutcome>(m, "MergeOutcome")
      .def_readonly("models", &MergeOutcome::models)
      .def_property_readonly("edges",
                             [](const MergeOutcome& o) { return o.graph.edges; });

  m.def("generate_scene", &generate_scene, py::arg("layout"), py::arg("n_cameras"),
        py::arg("n_points"), py::arg("seed"));
  m.def("derive_match_graph", &derive_match_graph, py::arg("scene"),
        py::arg("covis_frac") = 0.25, py::arg("weight_scale") = 100.0);
  m.def("cluster_images", &cluster_images, py::arg("graph"), py::arg("params"));
  m.def("solve_cluster_synthetic",
        [](const GroundTruthScene& scene, const std::vector<NodeId>& cluster,
           const NoiseModel& noise, std::uint64_t seed) {
          return solve_cluster_synthetic(
              scene, std::set<NodeId>(cluster.begin(), cluster.end()), noise, seed);
        },
        py::arg("scene"), py::arg("cluster"), py::arg("noise") = NoiseModel{},
        py::arg("seed") = 0);
  m.def("merge_all", &merge_all, py::arg("reconstructions"),
        py::arg("params") = MergeParams{});
  m.def("evaluate_against_gt", &evaluate_against_gt, py::arg("merged"), py::arg("scene"));
  m.def("mix_seed", [](std::uint64_t base, std::uint64_t tag) {
    return mix_seed(base, tag);
  });

  // file formats
  m.def("read_match_graph", &read_match_graph);
  m.def("write_match_graph", &write_match_graph);
  m.def("read_reconstruction", &read_reconstruction);
  m.def("write_reconstruction", &write_reconstruction);
  m.def("read_scene", &read_scene);
  m.def("write_scene", &write_scene);

  // full orchestration
  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("layout", &PipelineConfig::layout)
      .def_readwrite("cameras", &PipelineConfig::cameras)
      .def_readwrite("points", &PipelineConfig::points)
      .def_readwrite("covis", &PipelineConfig::covis)
      .def_readwrite("weight_scale", &PipelineConfig::weight_scale)
      .def_readwrite("scene_path", &PipelineConfig::scene_path)
      .def_readwrite("matches_path", &PipelineConfig::matches_path)
      .def_readwrite("workdir", &PipelineConfig::workdir)
      .def_readwrite("clustering", &PipelineConfig::clustering)
      .def_readwrite("ransac", &PipelineConfig::ransac)
      .def_readwrite("msd_reject", &PipelineConfig::msd_reject)
      .def_readwrite("noise", &PipelineConfig::noise)
      .def_readwrite("solver", &PipelineConfig::solver)
      .def_readwrite("solver_cmd", &PipelineConfig::solver_cmd)
      .def_readwrite("jobs", &PipelineConfig::jobs)
      .def_readwrite("seed", &PipelineConfig::seed);

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("stage_seconds", &RunReport::stage_seconds)
      .def_readonly("unsatisfied", &RunReport::unsatisfied)
      .def_readonly("anchors", &RunReport::anchors)
      .def_readonly("components", &RunReport::components)
      .def_readonly("failed_clusters", &RunReport::failed_clusters)
      .def_readonly("total_seconds", &RunReport::total_seconds)
      .def_property_readonly("metrics", [](const RunReport& r) -> py::object {
        if (!r.metrics) return py::none();
        return py::cast(*r.metrics);
      });

  m.def("run_pipeline", &run_pipeline, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Divide-and-conquer camera-pose reconstruction: graph clustering, "
            "parallel local solves, robust Sim(3) merging";

  bind_graph(m);
  bind_geometry(m);
  bind_pipeline(m);

  py::register_exception<IoError>(m, "IoError");
  py::register_exception<DisconnectedGraphError>(m, "DisconnectedGraphError");
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError");
  py::register_exception<NoConsensusError>(m, "NoConsensusError");
  py::register_exception<StageError>(m, "StageError");
}
