#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parsfm/error.hpp"
#include "parsfm/io.hpp"
#include "parsfm/pipeline.hpp"
#include "parsfm/rng.hpp"

namespace fs = std::filesystem;
using namespace parsfm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStageFailure = 1;
constexpr int kExitBadInput = 2;

void add_clustering_flags(CLI::App* cmd, PipelineConfig& config) {
  cmd->add_option("--max-cluster-size", config.clustering.s_max,
                  "Maximum images per cluster before expansion");
  cmd->add_option("--completeness", config.clustering.tau_c,
                  "Completeness ratio tau_c in (0,1]");
  cmd->add_option("--max-overlap", config.clustering.o_max,
                  "Overlap budget per cluster pair");
  cmd->add_option("--size-slack", config.clustering.size_slack,
                  "Allowed expansion overshoot fraction");
  cmd->add_option("--max-random-rounds", config.clustering.max_random_rounds,
                  "Random expansion round budget (0 = 10*K)");
}

void add_ransac_flags(CLI::App* cmd, PipelineConfig& config) {
  cmd->add_option("--ransac-threshold", config.ransac.threshold_rel,
                  "Inlier radius as a fraction of the target frame diameter");
  cmd->add_option("--ransac-iters", config.ransac.max_iters, "RANSAC iteration cap");
  cmd->add_option("--ransac-confidence", config.ransac.confidence,
                  "RANSAC early-exit confidence");
  cmd->add_option("--msd-reject", config.msd_reject,
                  "Merge-edge rejection threshold (relative residual)");
  cmd->add_option("--min-common", config.min_common,
                  "Common cameras required per merge edge");
}

void add_noise_flags(CLI::App* cmd, PipelineConfig& config) {
  cmd->add_option("--sigma-center", config.noise.sigma_center,
                  "Center noise (fraction of scene diameter)");
  cmd->add_option("--sigma-rot", config.noise.sigma_rot_deg, "Rotation noise (degrees)");
  cmd->add_option("--outlier-fraction", config.noise.outlier_fraction,
                  "Fraction of cameras replaced by random poses");
}

int run_solve(const PipelineConfig& base, const std::string& scene_path,
              const std::string& clusters_path, const std::string& out_dir) {
  PipelineConfig config = base;
  const ClusterSet clusters = read_clusters(clusters_path);
  std::optional<GroundTruthScene> scene;
  if (!scene_path.empty()) scene = read_scene(scene_path);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (int i = 0; i < static_cast<int>(clusters.size()); ++i) {
    // per-cluster membership file for external solvers
    nlohmann::json entry = nlohmann::json::array();
    entry.push_back({{"cluster_id", i},
                     {"images", std::vector<NodeId>(clusters.clusters[i].begin(),
                                                    clusters.clusters[i].end())}});
    std::ofstream out(dir / ("cluster_" + std::to_string(i) + ".json"));
    out << entry.dump(2) << "\n";
  }

  const SolveOutcome outcome =
      dispatch_local_solves(scene ? &*scene : nullptr, clusters, config, dir);
  for (const auto& rec : outcome.reconstructions) {
    write_reconstruction(dir / ("recon_" + std::to_string(rec.cluster_id) + ".json"), rec);
  }
  for (int failed : outcome.failed_clusters) {
    std::cerr << "cluster " << failed << " failed\n";
  }
  std::cout << outcome.reconstructions.size() << " cluster(s) solved, "
            << outcome.failed_clusters.size() << " failed\n";
  return outcome.reconstructions.empty() ? kExitStageFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divide-and-conquer camera-pose reconstruction"};
  app.require_subcommand(1);

  PipelineConfig config;
  std::string config_path;

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scene + matches");
  std::string sim_scene_out = "scene.json";
  std::string sim_matches_out = "matches.txt";
  simulate->add_option("--layout", config.layout, "orbit|grid|street");
  simulate->add_option("--cameras", config.cameras, "Camera count");
  simulate->add_option("--points", config.points, "Scene point count");
  simulate->add_option("--covis", config.covis, "Covisibility distance fraction");
  simulate->add_option("--weight-scale", config.weight_scale, "Match weight scale");
  simulate->add_option("--seed", config.seed, "Random seed");
  simulate->add_option("-o,--scene-out", sim_scene_out, "Scene output path");
  simulate->add_option("--matches-out", sim_matches_out, "Match graph output path");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cut + expand the match graph");
  std::string cl_matches, cl_out = "clusters.json";
  cluster->add_option("--matches", cl_matches, "Match graph file")->required();
  cluster->add_option("-o,--out", cl_out, "Clusters output path");
  cluster->add_option("--seed", config.clustering.seed, "Random seed");
  add_clustering_flags(cluster, config);

  // solve
  auto* solve = app.add_subcommand("solve", "Run local solves per cluster");
  std::string so_scene, so_clusters, so_dir = ".";
  solve->add_option("--scene", so_scene, "Scene file (required for synthetic solver)");
  solve->add_option("--clusters", so_clusters, "Clusters file")->required();
  solve->add_option("--out-dir", so_dir, "Output directory");
  solve->add_option("--solver", config.solver, "synthetic|external");
  solve->add_option("--solver-cmd", config.solver_cmd,
                    "External command with {cluster-file} {output-file}");
  solve->add_option("--jobs", config.jobs, "Parallel solver slots");
  solve->add_option("--seed", config.seed, "Random seed");
  solve->add_option("--cost-quadratic-us", config.cost_quadratic_us,
                    "Synthetic cost model: usec per squared cluster size");
  add_noise_flags(solve, config);

  // merge
  auto* merge = app.add_subcommand("merge", "Merge local reconstructions");
  std::vector<std::string> mg_inputs;
  std::string mg_out = "merged.json", mg_plan = "merge_plan.json";
  merge->add_option("--recon", mg_inputs, "Reconstruction files")->required();
  merge->add_option("-o,--out", mg_out, "Merged model output path");
  merge->add_option("--plan", mg_plan, "Merge plan output path");
  merge->add_option("--seed", config.seed, "Random seed");
  add_ransac_flags(merge, config);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compare a model against a scene");
  std::string ev_merged, ev_scene, ev_out = "metrics.json";
  evaluate->add_option("--merged", ev_merged, "Merged model file")->required();
  evaluate->add_option("--scene", ev_scene, "Ground-truth scene file")->required();
  evaluate->add_option("-o,--out", ev_out, "Metrics output path");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run the full pipeline");
  pipeline->add_option("--config", config_path, "key=value config file");
  pipeline->add_option("--workdir", config.workdir, "Artifact directory");
  pipeline->add_option("--layout", config.layout, "orbit|grid|street");
  pipeline->add_option("--cameras", config.cameras, "Camera count (simulated input)");
  pipeline->add_option("--points", config.points, "Scene point count");
  pipeline->add_option("--covis", config.covis, "Covisibility distance fraction");
  pipeline->add_option("--weight-scale", config.weight_scale, "Match weight scale");
  pipeline->add_option("--scene", config.scene_path, "Existing scene file");
  pipeline->add_option("--matches", config.matches_path, "Existing match graph file");
  pipeline->add_option("--solver", config.solver, "synthetic|external");
  pipeline->add_option("--solver-cmd", config.solver_cmd,
                       "External command with {cluster-file} {output-file}");
  pipeline->add_option("--jobs", config.jobs, "Parallel solver slots");
  pipeline->add_option("--seed", config.seed, "Random seed");
  pipeline->add_option("--cost-quadratic-us", config.cost_quadratic_us,
                       "Synthetic cost model: usec per squared cluster size");
  add_clustering_flags(pipeline, config);
  add_ransac_flags(pipeline, config);
  add_noise_flags(pipeline, config);

  // report
  auto* report = app.add_subcommand("report", "Render CSV summary from report.json");
  std::string rp_in = "report.json", rp_out = "report.csv";
  report->add_option("--input", rp_in, "Report JSON path");
  report->add_option("-o,--out", rp_out, "CSV output path");

  // Config-file values load before parsing so explicit flags override them.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      config_path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      config_path = arg.substr(9);
    }
  }
  if (!config_path.empty()) {
    try {
      config = read_config(config_path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitBadInput;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (simulate->parsed()) {
      const GroundTruthScene scene = generate_scene(parse_layout(config.layout),
                                                    config.cameras, config.points,
                                                    config.seed);
      write_scene(sim_scene_out, scene);
      const WeightedGraph g = derive_match_graph(scene, config.covis, config.weight_scale);
      write_match_graph(sim_matches_out, g);
      std::cout << "scene: " << scene.cameras.size() << " cameras, "
                << scene.points.size() << " points, " << g.num_edges() << " match edges\n";
    } else if (cluster->parsed()) {
      const WeightedGraph g = read_match_graph(cl_matches);
      const ClusteringResult result = cluster_images(g, config.clustering);
      write_clusters(cl_out, result.clusters);
      std::cout << result.k << " cluster(s)";
      if (!result.expansion.unsatisfied.empty()) {
        std::cout << "; unsatisfied:";
        for (int i : result.expansion.unsatisfied) std::cout << " " << i;
      }
      std::cout << "\n";
    } else if (solve->parsed()) {
      return run_solve(config, so_scene, so_clusters, so_dir);
    } else if (merge->parsed()) {
      std::vector<LocalReconstruction> recons;
      for (const auto& p : mg_inputs) recons.push_back(read_reconstruction(p));
      MergeParams params;
      params.ransac = config.ransac;
      params.msd_reject_rel = config.msd_reject;
      params.min_common = config.min_common;
      params.seed = mix_seed(config.seed, 0x3e6);
      const MergeOutcome outcome = merge_all(recons, params);
      for (std::size_t m = 0; m < outcome.models.size(); ++m) {
        fs::path out = mg_out;
        if (m > 0) {
          out = out.parent_path() /
                (out.stem().string() + "_" + std::to_string(m) + out.extension().string());
        }
        write_reconstruction(out, outcome.models[m].model);
      }
      std::cout << outcome.models.size() << " component(s), anchor "
                << outcome.models.front().plan.anchor << "\n";
    } else if (evaluate->parsed()) {
      const LocalReconstruction merged = read_reconstruction(ev_merged);
      const GroundTruthScene scene = read_scene(ev_scene);
      const GtMetrics m = evaluate_against_gt(merged, scene);
      const nlohmann::json j{{"rmse_frac", m.rmse_frac},
                             {"mean_rot_deg", m.mean_rot_deg},
                             {"max_rot_deg", m.max_rot_deg},
                             {"cameras", m.cameras},
                             {"fraction", m.fraction}};
      std::ofstream out(ev_out);
      out << j.dump(2) << "\n";
      std::cout << "rmse_frac=" << m.rmse_frac << " mean_rot_deg=" << m.mean_rot_deg
                << " cameras=" << m.cameras << "\n";
    } else if (pipeline->parsed()) {
      const RunReport rep = run_pipeline(config);
      std::cout << "pipeline ok: " << rep.components << " component(s) in "
                << rep.total_seconds << " s\n";
    } else if (report->parsed()) {
      render_report(rp_in, rp_out);
      std::cout << "wrote " << rp_out << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  }
  return kExitOk;
}
