#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "parsfm/reconstruction.hpp"

namespace parsfm {

/// Similarity transform mapping frame-1 coordinates into frame-2:
/// X2 = s * R * X1 + t, with s > 0 and R a proper rotation.
struct SimilarityTransform {
  double s = 1.0;
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static SimilarityTransform identity() { return {}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return s * (q * x) + t; }

  /// this ∘ other: apply `other` first, then this.
  SimilarityTransform compose(const SimilarityTransform& other) const {
    SimilarityTransform out;
    out.s = s * other.s;
    out.q = (q * other.q).normalized();
    out.t = s * (q * other.t) + t;
    return out;
  }

  SimilarityTransform inverse() const {
    SimilarityTransform out;
    out.s = 1.0 / s;
    out.q = q.conjugate();
    out.t = -(out.q * t) / s;
    return out;
  }

  Eigen::Matrix3d rotation() const { return q.toRotationMatrix(); }
};

/// Rotation-only relative pose, as produced by relative_euclidean.
struct EuclideanTransform {
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

/// A camera seen in two local frames under the same image id.
struct PosePair {
  CameraPose frame1;
  CameraPose frame2;
};

/// Camera-pose correspondences between two local frames. image_ids are unique
/// within the set; pairs are kept sorted by image_id.
struct CorrespondenceSet {
  std::vector<PosePair> pairs;

  std::size_t size() const { return pairs.size(); }
};

/// Correspondences shared by two reconstructions (matched by image id).
CorrespondenceSet common_correspondences(const LocalReconstruction& rec1,
                                         const LocalReconstruction& rec2);

struct RansacParams {
  double threshold_rel = 0.01;  // inlier radius as a fraction of the frame-2 diameter
  int max_iters = 1000;
  double confidence = 0.999;
  int min_inliers = 3;
  std::uint64_t seed = 0;
};

struct SimilarityEstimate {
  SimilarityTransform transform;
  std::vector<ImageId> inliers;  // ascending image ids
  int iterations = 0;
  bool refit_accepted = false;
};

/// Relative scale between two frames: the median over all center-pair distance
/// ratios ||Ci1 - Cj1|| / ||Ci2 - Cj2|| (even count: mean of the middle two).
/// Throws DegenerateInputError when frame-2 centers coincide.
double relative_scale(const CorrespondenceSet& corr);

/// Closed-form relative pose from a single correspondence and a known scale:
/// R12 = R2 * R1^T and t12 = C2 - s * R12 * C1, the unique (R, t) that makes
/// X2 = s * R * X1 + t exact for this camera.
EuclideanTransform relative_euclidean(const PosePair& pair, double s);

/// RANSAC similarity estimation over camera centers: 2-point minimal samples
/// (scale from the distance ratio, rotation from the first correspondence,
/// translation from its center identity), consensus on center residuals, and
/// a closed-form least-squares refit over the inlier centers guarded by a
/// 5-degree rotation sanity check. Throws on < 3 correspondences or when the
/// best consensus stays below the minimum inlier count.
SimilarityEstimate estimate_similarity(const CorrespondenceSet& corr,
                                       const RansacParams& params);

/// Least-squares similarity (scale + rotation + translation) mapping src onto
/// dst; closed-form orthogonal Procrustes with scale on centered coordinates.
SimilarityTransform fit_similarity(const std::vector<Eigen::Vector3d>& src,
                                   const std::vector<Eigen::Vector3d>& dst);

/// Maps the reconstruction into the target frame: centers and points through
/// T, camera rotations R_cam -> R_cam * R^T.
LocalReconstruction apply_similarity(const SimilarityTransform& T,
                                     const LocalReconstruction& rec);

/// Directed residual of T over point pairs: (1/2n) * sqrt(sum ||T x - x'||^2).
double mse(const SimilarityTransform& T,
           const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& pairs);

/// Symmetric residual: max of the two directed values.
double msd(double mse_12, double mse_21);

/// Geodesic angle between two rotations, in radians.
double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

}  // namespace parsfm
