#include "parsfm/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "parsfm/error.hpp"
#include "parsfm/io.hpp"
#include "parsfm/rng.hpp"

namespace parsfm {

using nlohmann::json;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

}  // namespace

void PipelineConfig::validate() const {
  clustering.validate();
  noise.validate();
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (solver != "synthetic" && solver != "external") {
    throw std::invalid_argument("solver must be 'synthetic' or 'external'");
  }
  if (solver == "external" && solver_cmd.empty()) {
    throw std::invalid_argument("external solver requires solver_cmd");
  }
  if (cost_quadratic_us < 0.0) throw std::invalid_argument("cost model must be >= 0");
  if (!(ransac.threshold_rel > 0.0)) {
    throw std::invalid_argument("ransac threshold must be > 0");
  }
  if (msd_reject <= 0.0) throw std::invalid_argument("msd_reject must be > 0");
}

void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value) {
  const auto as_int = [&](const char* name) {
    try {
      return std::stoi(value);
    } catch (...) {
      throw std::invalid_argument(std::string(name) + ": invalid integer '" + value + "'");
    }
  };
  const auto as_double = [&](const char* name) {
    try {
      return std::stod(value);
    } catch (...) {
      throw std::invalid_argument(std::string(name) + ": invalid number '" + value + "'");
    }
  };
  const auto as_seed = [&](const char* name) -> std::uint64_t {
    try {
      return std::stoull(value);
    } catch (...) {
      throw std::invalid_argument(std::string(name) + ": invalid seed '" + value + "'");
    }
  };

  if (key == "layout") config.layout = value;
  else if (key == "cameras") config.cameras = as_int("cameras");
  else if (key == "points") config.points = as_int("points");
  else if (key == "covis") config.covis = as_double("covis");
  else if (key == "weight_scale") config.weight_scale = as_double("weight_scale");
  else if (key == "scene") config.scene_path = value;
  else if (key == "matches") config.matches_path = value;
  else if (key == "workdir") config.workdir = value;
  else if (key == "max_cluster_size") config.clustering.s_max = as_int(key.c_str());
  else if (key == "completeness") config.clustering.tau_c = as_double(key.c_str());
  else if (key == "max_overlap") config.clustering.o_max = as_int(key.c_str());
  else if (key == "size_slack") config.clustering.size_slack = as_double(key.c_str());
  else if (key == "max_random_rounds") config.clustering.max_random_rounds = as_int(key.c_str());
  else if (key == "ransac_threshold") config.ransac.threshold_rel = as_double(key.c_str());
  else if (key == "ransac_iters") config.ransac.max_iters = as_int(key.c_str());
  else if (key == "ransac_confidence") config.ransac.confidence = as_double(key.c_str());
  else if (key == "msd_reject") config.msd_reject = as_double(key.c_str());
  else if (key == "min_common") config.min_common = as_int(key.c_str());
  else if (key == "sigma_center") config.noise.sigma_center = as_double(key.c_str());
  else if (key == "sigma_rot") config.noise.sigma_rot_deg = as_double(key.c_str());
  else if (key == "outlier_fraction") config.noise.outlier_fraction = as_double(key.c_str());
  else if (key == "solver") config.solver = value;
  else if (key == "solver_cmd") config.solver_cmd = value;
  else if (key == "cost_quadratic_us") config.cost_quadratic_us = as_double(key.c_str());
  else if (key == "jobs") config.jobs = as_int(key.c_str());
  else if (key == "seed") config.seed = as_seed(key.c_str());
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

PipelineConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  PipelineConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    try {
      apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return config;
}

SolveOutcome dispatch_local_solves(const GroundTruthScene* scene,
                                   const ClusterSet& clusters,
                                   const PipelineConfig& config,
                                   const std::filesystem::path& workdir) {
  const int k = static_cast<int>(clusters.size());
  if (k == 0) throw std::invalid_argument("no clusters to solve");
  if (config.solver == "synthetic" && scene == nullptr) {
    throw StageError("solve", "synthetic solver requires a scene");
  }

  struct Slot {
    std::optional<LocalReconstruction> recon;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
  };
  std::vector<Slot> slots(k);

  std::atomic<int> next{0};
  const int workers = std::min(config.jobs, k);
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= k) return;
      const auto start = std::chrono::steady_clock::now();
      try {
        if (config.solver == "synthetic") {
          const std::uint64_t cluster_seed = mix_seed(config.seed, 0xc1u, i);
          SyntheticSolve solve =
              solve_cluster_synthetic(*scene, clusters.clusters[i], config.noise,
                                      cluster_seed);
          solve.recon.cluster_id = i;
          solve.recon.frame = "cluster-" + std::to_string(i);
          if (config.cost_quadratic_us > 0.0) {
            const double m = static_cast<double>(clusters.clusters[i].size());
            std::this_thread::sleep_for(std::chrono::duration<double, std::micro>(
                config.cost_quadratic_us * m * m));
          }
          slots[i].recon = std::move(solve.recon);
        } else {
          const auto cluster_file =
              workdir / ("cluster_" + std::to_string(i) + ".json");
          const auto output_file = workdir / ("recon_" + std::to_string(i) + ".json");
          std::string cmd = replace_all(config.solver_cmd, "{cluster-file}",
                                        cluster_file.string());
          cmd = replace_all(cmd, "{output-file}", output_file.string());
          const int rc = std::system(cmd.c_str());
          if (rc != 0) {
            throw StageError("solve", "external command exited with status " +
                                          std::to_string(rc));
          }
          LocalReconstruction rec = read_reconstruction(output_file);
          rec.cluster_id = i;
          slots[i].recon = std::move(rec);
        }
      } catch (const std::exception& e) {
        slots[i].failed = true;
        slots[i].error = e.what();
      }
      slots[i].seconds = seconds_since(start);
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  SolveOutcome outcome;
  for (int i = 0; i < k; ++i) {
    outcome.seconds.emplace_back(i, slots[i].seconds);
    if (slots[i].failed || !slots[i].recon) {
      outcome.failed_clusters.push_back(i);
    } else {
      outcome.reconstructions.push_back(std::move(*slots[i].recon));
    }
  }
  return outcome;
}

namespace {

json metrics_to_json(const GtMetrics& m) {
  return json{{"rmse_frac", m.rmse_frac},
              {"mean_rot_deg", m.mean_rot_deg},
              {"max_rot_deg", m.max_rot_deg},
              {"cameras", m.cameras},
              {"fraction", m.fraction}};
}

json transform_to_json(const SimilarityTransform& t) {
  return json{{"s", t.s},
              {"q", json::array({t.q.w(), t.q.x(), t.q.y(), t.q.z()})},
              {"t", json::array({t.t.x(), t.t.y(), t.t.z()})}};
}

void write_merge_plan(const std::filesystem::path& path,
                      const std::vector<MergedModel>& models,
                      const MergeGraphResult& graph) {
  json components = json::array();
  for (const auto& model : models) {
    json minst = json::array();
    for (const Edge& e : model.plan.minst.edges) {
      minst.push_back(json{{"k1", e.a}, {"k2", e.b}, {"msd", e.weight}});
    }
    json to_anchor;
    for (const auto& [cid, t] : model.plan.to_anchor) {
      to_anchor[std::to_string(cid)] = transform_to_json(t);
    }
    json layers = json::array();
    for (const auto& layer : model.plan.layers) {
      layers.push_back(std::vector<NodeId>(layer.begin(), layer.end()));
    }
    components.push_back(json{{"anchor", model.plan.anchor},
                              {"minst", std::move(minst)},
                              {"layers", std::move(layers)},
                              {"to_anchor", std::move(to_anchor)}});
  }
  json edges = json::array();
  auto edge_json = [](const MergeEdge& e) {
    return json{{"k1", e.k1},         {"k2", e.k2},   {"msd", e.weight},
                {"mse12", e.mse12},   {"mse21", e.mse21},
                {"n_common", e.n_common}, {"n_inliers", e.inliers.size()},
                {"rejected", e.rejected}};
  };
  for (const auto& e : graph.edges) edges.push_back(edge_json(e));
  for (const auto& e : graph.rejected) edges.push_back(edge_json(e));
  json failed = json::array();
  for (const auto& [a, b] : graph.failed) failed.push_back(json::array({a, b}));

  json j{{"components", std::move(components)},
         {"edges", std::move(edges)},
         {"failed_pairs", std::move(failed)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const RunReport& report) {
  json stages = json::array();
  for (const auto& [name, secs] : report.stage_seconds) {
    stages.push_back(json{{"stage", name}, {"seconds", secs}});
  }
  json solves = json::array();
  for (const auto& [cid, secs] : report.solve_seconds) {
    solves.push_back(json{{"cluster_id", cid}, {"seconds", secs}});
  }
  json clusters = json::array();
  for (const auto& entry : report.clusters) {
    clusters.push_back(json{{"cluster_id", entry.cluster_id},
                            {"size", entry.size},
                            {"eta", entry.eta}});
  }
  json edges = json::array();
  for (const auto& e : report.merge_edges) {
    edges.push_back(json{{"k1", e.k1},
                         {"k2", e.k2},
                         {"n_common", e.n_common},
                         {"n_inliers", e.n_inliers},
                         {"msd", e.msd},
                         {"in_minst", e.in_minst},
                         {"rejected", e.rejected}});
  }
  json j{{"stages", std::move(stages)},
         {"solve_seconds", std::move(solves)},
         {"clusters", std::move(clusters)},
         {"unsatisfied", report.unsatisfied},
         {"expansion_rounds", report.expansion_rounds},
         {"merge_edges", std::move(edges)},
         {"anchors", report.anchors},
         {"components", report.components},
         {"failed_clusters", report.failed_clusters},
         {"total_seconds", report.total_seconds}};
  if (report.metrics) j["metrics"] = metrics_to_json(*report.metrics);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_report_csv(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "stage,seconds\n";
  for (const auto& [name, secs] : report.stage_seconds) {
    out << name << "," << secs << "\n";
  }
  for (const auto& [cid, secs] : report.solve_seconds) {
    out << "solve_cluster_" << cid << "," << secs << "\n";
  }
  out << "total," << report.total_seconds << "\n";
}

void render_report(const std::filesystem::path& report_json,
                   const std::filesystem::path& csv_out) {
  std::ifstream in(report_json);
  if (!in) throw IoError("cannot open " + report_json.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(report_json.string() + ": " + e.what());
  }
  RunReport report;
  for (const auto& s : j.value("stages", json::array())) {
    report.stage_seconds.emplace_back(s.at("stage").get<std::string>(),
                                      s.at("seconds").get<double>());
  }
  for (const auto& s : j.value("solve_seconds", json::array())) {
    report.solve_seconds.emplace_back(s.at("cluster_id").get<int>(),
                                      s.at("seconds").get<double>());
  }
  report.total_seconds = j.value("total_seconds", 0.0);
  write_report_csv(csv_out, report);
}

RunReport run_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto t_total = std::chrono::steady_clock::now();
  const std::filesystem::path workdir(config.workdir);
  std::filesystem::create_directories(workdir);

  RunReport report;

  // Stage: inputs (simulate or load).
  std::optional<GroundTruthScene> scene;
  WeightedGraph matches;
  {
    const auto t0 = std::chrono::steady_clock::now();
    if (!config.matches_path.empty()) {
      matches = read_match_graph(config.matches_path);
      if (!config.scene_path.empty()) scene = read_scene(config.scene_path);
    } else {
      if (!config.scene_path.empty()) {
        scene = read_scene(config.scene_path);
      } else {
        scene = generate_scene(parse_layout(config.layout), config.cameras, config.points,
                               config.seed);
        write_scene(workdir / "scene.json", *scene);
      }
      matches = derive_match_graph(*scene, config.covis, config.weight_scale);
      write_match_graph(workdir / "matches.txt", matches);
    }
    if (matches.num_nodes() == 0) throw StageError("input", "match graph is empty");
    report.stage_seconds.emplace_back("input", seconds_since(t0));
  }

  // Stage: clustering. The run seed drives every stage.
  ClusteringResult clustering;
  {
    const auto t0 = std::chrono::steady_clock::now();
    ClusteringParams cparams = config.clustering;
    cparams.seed = mix_seed(config.seed, 0xc15);
    try {
      clustering = cluster_images(matches, cparams);
    } catch (const std::exception& e) {
      throw StageError("cluster", e.what());
    }
    write_clusters(workdir / "clusters.json", clustering.clusters);
    for (int i = 0; i < clustering.k; ++i) {
      ClusterSet single;
      single.clusters.push_back(clustering.clusters.clusters[i]);
      json j = json::array();
      j.push_back(json{{"cluster_id", i},
                       {"images", std::vector<NodeId>(single.clusters[0].begin(),
                                                      single.clusters[0].end())}});
      std::ofstream out(workdir / ("cluster_" + std::to_string(i) + ".json"));
      out << j.dump(2) << "\n";
      report.clusters.push_back(
          {i, clustering.clusters.clusters[i].size(), clustering.eta[i]});
    }
    report.unsatisfied = clustering.expansion.unsatisfied;
    report.expansion_rounds = clustering.expansion.rounds_used;
    report.stage_seconds.emplace_back("cluster", seconds_since(t0));
  }

  // Stage: local solves.
  SolveOutcome solves;
  {
    const auto t0 = std::chrono::steady_clock::now();
    solves = dispatch_local_solves(scene ? &*scene : nullptr, clustering.clusters, config,
                                   workdir);
    for (const auto& rec : solves.reconstructions) {
      write_reconstruction(workdir / ("recon_" + std::to_string(rec.cluster_id) + ".json"),
                           rec);
    }
    report.solve_seconds = solves.seconds;
    report.failed_clusters = solves.failed_clusters;
    report.stage_seconds.emplace_back("solve", seconds_since(t0));
    if (solves.reconstructions.empty()) {
      throw StageError("solve", "all local solves failed");
    }
  }

  // Stage: merge.
  MergeOutcome merged;
  {
    const auto t0 = std::chrono::steady_clock::now();
    MergeParams params;
    params.ransac = config.ransac;
    params.msd_reject_rel = config.msd_reject;
    params.min_common = config.min_common;
    params.seed = mix_seed(config.seed, 0x3e6);
    try {
      merged = merge_all(solves.reconstructions, params);
    } catch (const std::exception& e) {
      throw StageError("merge", e.what());
    }
    report.components = static_cast<int>(merged.models.size());
    for (std::size_t m = 0; m < merged.models.size(); ++m) {
      const auto name = m == 0 ? std::string("merged.json")
                               : "merged_" + std::to_string(m) + ".json";
      write_reconstruction(workdir / name, merged.models[m].model);
      report.anchors.push_back(merged.models[m].plan.anchor);
    }
    write_merge_plan(workdir / "merge_plan.json", merged.models, merged.graph);

    std::set<std::pair<NodeId, NodeId>> minst_edges;
    for (const auto& model : merged.models) {
      for (const Edge& e : model.plan.minst.edges) minst_edges.insert({e.a, e.b});
    }
    auto record_edge = [&](const MergeEdge& e) {
      MergeEdgeReportEntry entry;
      entry.k1 = e.k1;
      entry.k2 = e.k2;
      entry.n_common = e.n_common;
      entry.n_inliers = static_cast<int>(e.inliers.size());
      entry.msd = e.weight;
      entry.rejected = e.rejected;
      entry.in_minst = minst_edges.count({static_cast<NodeId>(std::min(e.k1, e.k2)),
                                          static_cast<NodeId>(std::max(e.k1, e.k2))}) > 0;
      report.merge_edges.push_back(entry);
    };
    for (const auto& e : merged.graph.edges) record_edge(e);
    for (const auto& e : merged.graph.rejected) record_edge(e);
    report.stage_seconds.emplace_back("merge", seconds_since(t0));
  }

  // Stage: evaluation against ground truth, when available.
  if (scene && !merged.models.empty()) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      report.metrics = evaluate_against_gt(merged.models.front().model, *scene);
      json j = metrics_to_json(*report.metrics);
      std::ofstream out(workdir / "metrics.json");
      out << j.dump(2) << "\n";
    } catch (const DegenerateInputError&) {
      // too few cameras to evaluate; leave metrics unset
    }
    report.stage_seconds.emplace_back("evaluate", seconds_since(t0));
  }

  report.total_seconds = seconds_since(t_total);
  write_report_json(workdir / "report.json", report);
  write_report_csv(workdir / "report.csv", report);
  return report;
}

}  // namespace parsfm
