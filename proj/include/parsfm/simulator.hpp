#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "parsfm/graph.hpp"
#include "parsfm/reconstruction.hpp"
#include "parsfm/sim3.hpp"

namespace parsfm {

enum class Layout { kOrbit, kGrid, kStreet };

Layout parse_layout(const std::string& name);
std::string layout_name(Layout layout);

/// Seeded ground-truth scene: camera poses in the world frame plus scene
/// points; diameter is the camera-center bounding-box diagonal.
struct GroundTruthScene {
  std::vector<CameraPose> cameras;
  std::vector<Eigen::Vector3d> points;
  double diameter = 0.0;
  Layout layout = Layout::kOrbit;
  std::uint64_t seed = 0;

  const CameraPose* find_camera(ImageId id) const {
    for (const auto& c : cameras) {
      if (c.image_id == id) return &c;
    }
    return nullptr;
  }
};

struct NoiseModel {
  double sigma_center = 0.0;     // center noise, fraction of scene diameter
  double sigma_rot_deg = 0.0;    // rotation noise magnitude, degrees
  double outlier_fraction = 0.0; // in [0, 0.5)
  double gauge_scale_min = 0.5;  // per-cluster gauge scale range
  double gauge_scale_max = 2.0;

  void validate() const;
};

/// Synthetic local-solver output: the reconstruction, the gauge it was
/// expressed in, and the ids it corrupted (test instrumentation).
struct SyntheticSolve {
  LocalReconstruction recon;
  SimilarityTransform gauge;       // world frame -> local frame
  std::vector<ImageId> outlier_ids;
};

struct GtMetrics {
  double rmse_frac = 0.0;      // center RMSE after alignment, fraction of diameter
  double mean_rot_deg = 0.0;
  double max_rot_deg = 0.0;
  int cameras = 0;             // recovered camera count
  double fraction = 0.0;       // recovered / ground-truth cameras
};

/// Deterministic scene generation. orbit: cameras on a circle looking inward;
/// grid: aerial lawn-mower rows looking down; street: a jittered line.
GroundTruthScene generate_scene(Layout layout, int n_cameras, int n_points,
                                std::uint64_t seed);

/// Match graph from covisibility: cameras within covis_frac * diameter whose
/// viewing directions differ by < 60 degrees; weight decays linearly with
/// distance: floor(weight_scale * (1 - d/d_max)) + 1.
WeightedGraph derive_match_graph(const GroundTruthScene& scene, double covis_frac,
                                 double weight_scale);

/// Stand-in local solver: ground-truth poses of the cluster under one fresh
/// random gauge, center/rotation noise, and an optional outlier subset
/// replaced by uniform-random poses. Points visible from >= 2 cluster cameras
/// are carried along under the same gauge and noise.
SyntheticSolve solve_cluster_synthetic(const GroundTruthScene& scene,
                                       const std::set<NodeId>& cluster,
                                       const NoiseModel& noise, std::uint64_t seed);

/// Gauge-invariant accuracy metrics: least-squares similarity alignment of the
/// merged centers onto ground truth, then center RMSE (fraction of diameter)
/// and rotation geodesic errors in degrees.
GtMetrics evaluate_against_gt(const LocalReconstruction& merged,
                              const GroundTruthScene& scene);

}  // namespace parsfm
