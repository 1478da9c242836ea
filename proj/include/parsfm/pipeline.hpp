#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parsfm/clustering.hpp"
#include "parsfm/merge.hpp"
#include "parsfm/simulator.hpp"

namespace parsfm {

/// Raised when a pipeline stage fails hard (exit code 1 territory).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  // scene simulation (used when no matches file is supplied)
  std::string layout = "orbit";
  int cameras = 200;
  int points = 400;
  double covis = 0.25;
  double weight_scale = 100.0;

  // inputs; empty means simulate
  std::string scene_path;
  std::string matches_path;
  std::string workdir = ".";

  ClusteringParams clustering;
  RansacParams ransac;
  double msd_reject = 0.05;
  int min_common = 3;
  NoiseModel noise;

  std::string solver = "synthetic";  // synthetic | external
  std::string solver_cmd;            // template with {cluster-file} {output-file}
  double cost_quadratic_us = 0.0;    // synthetic per-cluster cost model: c * m^2 usec
  int jobs = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Flat key=value config file; '#' starts a comment. Unknown keys are errors.
PipelineConfig read_config(const std::filesystem::path& path);
void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value);

struct ClusterReportEntry {
  int cluster_id = 0;
  std::size_t size = 0;
  double eta = 0.0;
};

struct MergeEdgeReportEntry {
  int k1 = 0;
  int k2 = 0;
  int n_common = 0;
  int n_inliers = 0;
  double msd = 0.0;
  bool in_minst = false;
  bool rejected = false;
};

struct RunReport {
  std::vector<std::pair<std::string, double>> stage_seconds;  // ordered stages
  std::vector<std::pair<int, double>> solve_seconds;          // per cluster
  std::vector<ClusterReportEntry> clusters;
  std::vector<int> unsatisfied;
  int expansion_rounds = 0;
  std::vector<MergeEdgeReportEntry> merge_edges;
  std::vector<int> anchors;  // one per merged component
  int components = 0;
  std::vector<int> failed_clusters;
  std::optional<GtMetrics> metrics;
  double total_seconds = 0.0;
};

void write_report_json(const std::filesystem::path& path, const RunReport& report);
void write_report_csv(const std::filesystem::path& path, const RunReport& report);
/// Renders the CSV summary from a previously written report.json.
void render_report(const std::filesystem::path& report_json,
                   const std::filesystem::path& csv_out);

struct SolveOutcome {
  std::vector<LocalReconstruction> reconstructions;  // sorted by cluster_id
  std::vector<int> failed_clusters;
  std::vector<std::pair<int, double>> seconds;  // per cluster, by cluster_id
};

/// Runs at most `jobs` local solves concurrently. Synthetic solves draw from
/// per-cluster seeds; external solves substitute {cluster-file} and
/// {output-file} in the command template. Failed clusters are reported and
/// excluded; results are ordered by cluster_id regardless of completion order.
SolveOutcome dispatch_local_solves(const GroundTruthScene* scene,
                                   const ClusterSet& clusters,
                                   const PipelineConfig& config,
                                   const std::filesystem::path& workdir);

/// Full pipeline: cluster -> solve -> merge -> evaluate, writing artifacts
/// into the workdir and returning the run report.
RunReport run_pipeline(const PipelineConfig& config);

}  // namespace parsfm
