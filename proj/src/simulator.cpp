#include "parsfm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "parsfm/error.hpp"
#include "parsfm/rng.hpp"

namespace parsfm {

Layout parse_layout(const std::string& name) {
  if (name == "orbit") return Layout::kOrbit;
  if (name == "grid") return Layout::kGrid;
  if (name == "street") return Layout::kStreet;
  throw std::invalid_argument("unknown layout '" + name + "' (orbit|grid|street)");
}

std::string layout_name(Layout layout) {
  switch (layout) {
    case Layout::kOrbit: return "orbit";
    case Layout::kGrid: return "grid";
    case Layout::kStreet: return "street";
  }
  return "orbit";
}

void NoiseModel::validate() const {
  if (!(sigma_center >= 0.0) || !(sigma_rot_deg >= 0.0)) {
    throw std::invalid_argument("noise sigmas must be >= 0");
  }
  if (!(outlier_fraction >= 0.0) || outlier_fraction >= 0.5) {
    throw std::invalid_argument("outlier_fraction must be in [0, 0.5)");
  }
  if (!(gauge_scale_min > 0.0) || gauge_scale_max < gauge_scale_min) {
    throw std::invalid_argument("invalid gauge scale range");
  }
}

namespace {

// World-to-camera rotation with the optical axis along `forward`.
Eigen::Quaterniond look_rotation(const Eigen::Vector3d& forward, const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = forward.normalized();
  Eigen::Vector3d x = up.cross(z);
  if (x.norm() < 1e-9) x = Eigen::Vector3d::UnitX().cross(z);
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return Eigen::Quaterniond(r).normalized();
}

double scene_diameter(const std::vector<CameraPose>& cameras) {
  std::vector<Eigen::Vector3d> centers;
  centers.reserve(cameras.size());
  for (const auto& c : cameras) centers.push_back(c.C);
  return bounding_diameter(centers);
}

}  // namespace

GroundTruthScene generate_scene(Layout layout, int n_cameras, int n_points,
                                std::uint64_t seed) {
  if (n_cameras < 2) throw std::invalid_argument("need at least 2 cameras");
  if (n_points < 0) throw std::invalid_argument("n_points must be >= 0");

  GroundTruthScene scene;
  scene.layout = layout;
  scene.seed = seed;
  Rng rng(mix_seed(seed, 0x5ce2e));

  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  switch (layout) {
    case Layout::kOrbit: {
      // circle on the sphere with a gentle height wave: centers stay exactly
      // radius from the origin but the ring is not planar
      const double radius = 10.0;
      const double band = 0.12;  // out-of-plane elevation amplitude, radians
      for (int i = 0; i < n_cameras; ++i) {
        const double angle = 2.0 * M_PI * i / n_cameras;
        const double elev = band * std::sin(2.0 * angle);
        const Eigen::Vector3d c(radius * std::cos(angle) * std::cos(elev),
                                radius * std::sin(angle) * std::cos(elev),
                                radius * std::sin(elev));
        scene.cameras.emplace_back(static_cast<ImageId>(i),
                                   look_rotation(origin - c, Eigen::Vector3d::UnitZ()), c);
      }
      for (int i = 0; i < n_points; ++i) {
        scene.points.push_back(rng.uniform_box(Eigen::Vector3d(-4, -4, -2),
                                               Eigen::Vector3d(4, 4, 2)));
      }
      break;
    }
    case Layout::kGrid: {
      const double spacing = 1.0;
      const double height = 4.0;
      const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(n_cameras))));
      for (int i = 0; i < n_cameras; ++i) {
        const int row = i / cols;
        const int col_index = i % cols;
        // lawn-mower: odd rows run backwards
        const int col = (row % 2 == 0) ? col_index : (cols - 1 - col_index);
        const Eigen::Vector3d c(col * spacing, row * spacing, height);
        scene.cameras.emplace_back(static_cast<ImageId>(i),
                                   look_rotation(-Eigen::Vector3d::UnitZ(),
                                                 Eigen::Vector3d::UnitX()),
                                   c);
      }
      const double extent_x = (cols - 1) * spacing;
      const double extent_y = ((n_cameras - 1) / cols) * spacing;
      for (int i = 0; i < n_points; ++i) {
        scene.points.push_back(
            rng.uniform_box(Eigen::Vector3d(0, 0, 0),
                            Eigen::Vector3d(std::max(extent_x, spacing),
                                            std::max(extent_y, spacing), 0.5)));
      }
      break;
    }
    case Layout::kStreet: {
      const double spacing = 1.0;
      for (int i = 0; i < n_cameras; ++i) {
        const Eigen::Vector3d c(i * spacing + 0.1 * rng.normal(), 0.2 * rng.normal(),
                                1.6 + 0.05 * rng.normal());
        // facade side at y = 6
        scene.cameras.emplace_back(static_cast<ImageId>(i),
                                   look_rotation(Eigen::Vector3d::UnitY(),
                                                 Eigen::Vector3d::UnitZ()),
                                   c);
      }
      const double extent = (n_cameras - 1) * spacing;
      for (int i = 0; i < n_points; ++i) {
        scene.points.push_back(rng.uniform_box(Eigen::Vector3d(0, 5, 0),
                                               Eigen::Vector3d(std::max(extent, 1.0), 7, 4)));
      }
      break;
    }
  }
  scene.diameter = scene_diameter(scene.cameras);
  return scene;
}

WeightedGraph derive_match_graph(const GroundTruthScene& scene, double covis_frac,
                                 double weight_scale) {
  if (!(covis_frac > 0.0)) throw std::invalid_argument("covis_frac must be > 0");
  if (!(weight_scale >= 0.0)) throw std::invalid_argument("weight_scale must be >= 0");

  const double d_max = covis_frac * scene.diameter;
  const double min_cos = std::cos(60.0 * M_PI / 180.0);
  WeightedGraph g;
  for (const auto& cam : scene.cameras) g.add_node(cam.image_id);

  const std::size_t n = scene.cameras.size();
  std::vector<Eigen::Vector3d> dirs(n);
  for (std::size_t i = 0; i < n; ++i) dirs[i] = scene.cameras[i].view_direction();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (scene.cameras[i].C - scene.cameras[j].C).norm();
      if (d > d_max) continue;
      if (dirs[i].dot(dirs[j]) <= min_cos) continue;
      const double w = std::floor(weight_scale * (1.0 - d / d_max)) + 1.0;
      g.add_edge(scene.cameras[i].image_id, scene.cameras[j].image_id, w);
    }
  }
  return g;
}

namespace {

bool observes(const CameraPose& cam, const Eigen::Vector3d& point) {
  const Eigen::Vector3d in_cam = cam.q * (point - cam.C);
  if (in_cam.z() <= 0.0) return false;
  return in_cam.normalized().z() > std::cos(60.0 * M_PI / 180.0);
}

}  // namespace

SyntheticSolve solve_cluster_synthetic(const GroundTruthScene& scene,
                                       const std::set<NodeId>& cluster,
                                       const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  if (cluster.empty()) throw std::invalid_argument("cluster is empty");
  std::map<ImageId, const CameraPose*> by_id;
  for (const auto& c : scene.cameras) by_id[c.image_id] = &c;
  for (NodeId id : cluster) {
    if (!by_id.count(id)) {
      throw std::invalid_argument("cluster references unknown image id " +
                                  std::to_string(id));
    }
  }

  Rng rng(mix_seed(seed, 0x50a1e));
  SyntheticSolve out;

  // One fresh gauge per cluster: scale, uniform rotation, translation within
  // the scene diameter.
  out.gauge.s = rng.uniform(noise.gauge_scale_min, noise.gauge_scale_max);
  out.gauge.q = rng.rotation();
  out.gauge.t = rng.uniform_box(Eigen::Vector3d::Constant(-scene.diameter),
                                Eigen::Vector3d::Constant(scene.diameter));

  const double sigma_c = noise.sigma_center * scene.diameter;
  const double sigma_r = noise.sigma_rot_deg * M_PI / 180.0;

  for (NodeId id : cluster) {
    const CameraPose& gt = *by_id.at(id);
    // noise in scene units, then the gauge
    Eigen::Vector3d c = gt.C;
    Eigen::Quaterniond q = gt.q;
    if (sigma_c > 0.0) c += rng.normal3(sigma_c);
    if (sigma_r > 0.0) {
      const Eigen::Vector3d axis = rng.unit_vector();
      const double angle = sigma_r * rng.normal();
      q = (Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis)) * q).normalized();
    }
    out.recon.cameras.emplace_back(id, (q * out.gauge.q.conjugate()).normalized(),
                                   out.gauge.apply(c));
  }

  // Replace floor(outlier_fraction * |cluster|) cameras with uniform-random
  // poses inside the gauged bounding box.
  const std::size_t n_outliers =
      static_cast<std::size_t>(noise.outlier_fraction * cluster.size());
  if (n_outliers > 0) {
    std::vector<std::size_t> order(out.recon.cameras.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j = i + rng.uniform_int(order.size() - i);
      std::swap(order[i], order[j]);
    }
    Eigen::Vector3d lo = out.recon.cameras.front().C;
    Eigen::Vector3d hi = lo;
    for (const auto& cam : out.recon.cameras) {
      lo = lo.cwiseMin(cam.C);
      hi = hi.cwiseMax(cam.C);
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + n_outliers);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t idx : chosen) {
      auto& cam = out.recon.cameras[idx];
      cam.C = rng.uniform_box(lo, hi);
      cam.q = rng.rotation();
      out.outlier_ids.push_back(cam.image_id);
    }
    std::sort(out.outlier_ids.begin(), out.outlier_ids.end());
  }

  // Points visible from at least two cluster cameras, same gauge + noise.
  for (std::size_t pid = 0; pid < scene.points.size(); ++pid) {
    std::vector<ImageId> obs;
    for (NodeId id : cluster) {
      if (observes(*by_id.at(id), scene.points[pid])) obs.push_back(id);
    }
    if (obs.size() < 2) continue;
    Eigen::Vector3d p = scene.points[pid];
    if (sigma_c > 0.0) p += rng.normal3(sigma_c);
    out.recon.points.push_back(Point3D{static_cast<PointId>(pid), out.gauge.apply(p),
                                       std::move(obs)});
  }

  return out;
}

GtMetrics evaluate_against_gt(const LocalReconstruction& merged,
                              const GroundTruthScene& scene) {
  std::map<ImageId, const CameraPose*> gt_by_id;
  for (const auto& c : scene.cameras) gt_by_id[c.image_id] = &c;

  std::vector<Eigen::Vector3d> src, dst;
  std::vector<const CameraPose*> est_cams, gt_cams;
  for (const auto& cam : merged.cameras) {
    const auto it = gt_by_id.find(cam.image_id);
    if (it == gt_by_id.end()) {
      throw std::invalid_argument("merged camera " + std::to_string(cam.image_id) +
                                  " is not part of the scene");
    }
    src.push_back(cam.C);
    dst.push_back(it->second->C);
    est_cams.push_back(&cam);
    gt_cams.push_back(it->second);
  }
  if (src.size() < 3) {
    throw DegenerateInputError("need >= 3 common cameras to evaluate, got " +
                               std::to_string(src.size()));
  }

  const SimilarityTransform align = fit_similarity(src, dst);

  double sq_sum = 0.0;
  double rot_sum = 0.0;
  double rot_max = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    sq_sum += (align.apply(src[i]) - dst[i]).squaredNorm();
    const Eigen::Quaterniond aligned = (est_cams[i]->q * align.q.conjugate()).normalized();
    const double err = rotation_angle(aligned, gt_cams[i]->q) * 180.0 / M_PI;
    rot_sum += err;
    rot_max = std::max(rot_max, err);
  }

  GtMetrics m;
  m.cameras = static_cast<int>(src.size());
  m.fraction = static_cast<double>(src.size()) / static_cast<double>(scene.cameras.size());
  m.rmse_frac = std::sqrt(sq_sum / static_cast<double>(src.size())) / scene.diameter;
  m.mean_rot_deg = rot_sum / static_cast<double>(src.size());
  m.max_rot_deg = rot_max;
  return m;
}

}  // namespace parsfm
