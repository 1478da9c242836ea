#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace parsfm {

using ImageId = std::uint64_t;
using PointId = std::uint64_t;

/// Camera pose with world-to-camera rotation stored as a unit quaternion and
/// the camera center C in scene units. The translation column, when needed,
/// is t = -R*C.
struct CameraPose {
  ImageId image_id = 0;
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();  // world-to-camera
  Eigen::Vector3d C = Eigen::Vector3d::Zero();

  CameraPose() = default;
  CameraPose(ImageId id, const Eigen::Quaterniond& q_in, const Eigen::Vector3d& c_in)
      : image_id(id), q(q_in), C(c_in) {
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > 1e-9) {
      throw std::invalid_argument("camera " + std::to_string(id) +
                                  ": quaternion is not unit-norm");
    }
    q.normalize();
  }

  Eigen::Matrix3d rotation() const { return q.toRotationMatrix(); }
  Eigen::Vector3d translation() const { return -(q * C); }
  /// Optical axis in world coordinates (camera looks along +z).
  Eigen::Vector3d view_direction() const { return q.conjugate() * Eigen::Vector3d::UnitZ(); }
};

struct Point3D {
  PointId id = 0;
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  std::vector<ImageId> observations;  // observing image ids, ascending
};

/// Per-cluster camera poses (plus optional 3D points) in an arbitrary local
/// frame. image_ids are unique within one reconstruction.
struct LocalReconstruction {
  int cluster_id = 0;
  std::string frame;  // opaque local frame tag
  std::vector<CameraPose> cameras;
  std::vector<Point3D> points;

  std::size_t size() const { return cameras.size(); }
  const CameraPose* find_camera(ImageId id) const {
    for (const auto& c : cameras) {
      if (c.image_id == id) return &c;
    }
    return nullptr;
  }
};

/// Bounding-box diagonal of a center cloud; 0 for fewer than 2 points.
double bounding_diameter(const std::vector<Eigen::Vector3d>& points);
double camera_bounding_diameter(const LocalReconstruction& rec);

}  // namespace parsfm
