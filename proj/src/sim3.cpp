#include "parsfm/sim3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

#include "parsfm/error.hpp"
#include "parsfm/rng.hpp"

namespace parsfm {

double bounding_diameter(const std::vector<Eigen::Vector3d>& points) {
  if (points.size() < 2) return 0.0;
  Eigen::Vector3d lo = points.front();
  Eigen::Vector3d hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

double camera_bounding_diameter(const LocalReconstruction& rec) {
  std::vector<Eigen::Vector3d> centers;
  centers.reserve(rec.cameras.size());
  for (const auto& c : rec.cameras) centers.push_back(c.C);
  return bounding_diameter(centers);
}

CorrespondenceSet common_correspondences(const LocalReconstruction& rec1,
                                         const LocalReconstruction& rec2) {
  std::map<ImageId, const CameraPose*> by_id;
  for (const auto& c : rec1.cameras) by_id[c.image_id] = &c;
  std::map<ImageId, PosePair> matched;
  for (const auto& c : rec2.cameras) {
    auto it = by_id.find(c.image_id);
    if (it != by_id.end()) matched[c.image_id] = PosePair{*it->second, c};
  }
  CorrespondenceSet out;
  out.pairs.reserve(matched.size());
  for (auto& [id, pair] : matched) out.pairs.push_back(std::move(pair));
  return out;
}

double relative_scale(const CorrespondenceSet& corr) {
  const auto& pairs = corr.pairs;
  if (pairs.size() < 2) {
    throw std::invalid_argument("relative_scale needs at least 2 correspondences");
  }
  std::vector<Eigen::Vector3d> centers2;
  for (const auto& p : pairs) centers2.push_back(p.frame2.C);
  const double diam2 = bounding_diameter(centers2);

  std::vector<double> ratios;
  std::ostringstream degenerate;
  bool any_degenerate = false;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      const double d1 = (pairs[i].frame1.C - pairs[j].frame1.C).norm();
      const double d2 = (pairs[i].frame2.C - pairs[j].frame2.C).norm();
      if (d2 <= 1e-12 * diam2) {
        if (any_degenerate) degenerate << ", ";
        degenerate << "(" << pairs[i].frame2.image_id << "," << pairs[j].frame2.image_id
                   << ")";
        any_degenerate = true;
        continue;
      }
      ratios.push_back(d1 / d2);
    }
  }
  if (any_degenerate) {
    throw DegenerateInputError("coincident frame-2 centers for pairs: " + degenerate.str());
  }
  std::sort(ratios.begin(), ratios.end());
  const std::size_t n = ratios.size();
  return n % 2 == 1 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
}

EuclideanTransform relative_euclidean(const PosePair& pair, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw std::invalid_argument("scale must be positive and finite");
  }
  EuclideanTransform out;
  out.q = (pair.frame2.q * pair.frame1.q.conjugate()).normalized();
  out.t = pair.frame2.C - s * (out.q * pair.frame1.C);
  return out;
}

double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const Eigen::Quaterniond rel = a.conjugate() * b;
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

SimilarityTransform fit_similarity(const std::vector<Eigen::Vector3d>& src,
                                   const std::vector<Eigen::Vector3d>& dst) {
  if (src.size() != dst.size() || src.size() < 3) {
    throw std::invalid_argument("fit_similarity needs >= 3 paired points");
  }
  const std::size_t n = src.size();
  Eigen::Matrix3Xd x(3, n), y(3, n);
  for (std::size_t i = 0; i < n; ++i) {
    x.col(i) = src[i];
    y.col(i) = dst[i];
  }
  const Eigen::Matrix4d m = Eigen::umeyama(x, y, true);
  SimilarityTransform out;
  const Eigen::Matrix3d sr = m.topLeftCorner<3, 3>();
  out.s = std::cbrt(sr.determinant());
  out.q = Eigen::Quaterniond(Eigen::Matrix3d(sr / out.s)).normalized();
  out.t = m.topRightCorner<3, 1>();
  return out;
}

namespace {

// Frame-change rotation implied by the two world-to-camera copies of one
// shared camera: R2 = R1 * R^T under the frame change, hence R = R2^T * R1.
Eigen::Quaterniond frame_rotation(const PosePair& pair) {
  return (pair.frame2.q.conjugate() * pair.frame1.q).normalized();
}

// Inlier rotation closest (summed chordal distance) to all other inlier
// relative rotations; deterministic via the ascending image-id order.
Eigen::Quaterniond median_rotation(const std::vector<Eigen::Quaterniond>& rotations) {
  double best_cost = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    double cost = 0.0;
    for (std::size_t j = 0; j < rotations.size(); ++j) {
      if (i != j) cost += rotation_angle(rotations[i], rotations[j]);
    }
    if (cost < best_cost - 1e-15) {
      best_cost = cost;
      best = i;
    }
  }
  return rotations[best];
}

// Chordal mean of a tight rotation cluster: sign-align and renormalize the
// quaternion sum.
Eigen::Quaterniond mean_rotation(const std::vector<Eigen::Quaterniond>& rotations) {
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  const Eigen::Vector4d ref = rotations.front().coeffs();
  for (const auto& q : rotations) {
    const Eigen::Vector4d v = q.coeffs();
    sum += (v.dot(ref) >= 0.0) ? v : Eigen::Vector4d(-v);
  }
  Eigen::Quaterniond mean(sum(3), sum(0), sum(1), sum(2));
  return mean.normalized();
}

// Closed-form least squares for (s, t) with the rotation held fixed:
// s = <y~, R x~> / <x~, x~> over centered coordinates, t from the means.
// The rotation comes from the inlier relative camera rotations; camera
// centers in a thin overlap band condition the rotation too poorly for a
// center-only Procrustes fit.
std::optional<SimilarityTransform> refit_with_rotation(
    const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst,
    const Eigen::Quaterniond& rotation) {
  const std::size_t n = src.size();
  Eigen::Vector3d mean1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean2 = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean1 += src[i];
    mean2 += dst[i];
  }
  mean1 /= static_cast<double>(n);
  mean2 /= static_cast<double>(n);

  double dot = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d rx = rotation * (src[i] - mean1);
    dot += rx.dot(dst[i] - mean2);
    norm += rx.squaredNorm();
  }
  if (!(norm > 0.0) || !(dot > 0.0)) return std::nullopt;

  SimilarityTransform out;
  out.s = dot / norm;
  out.q = rotation;
  out.t = mean2 - out.s * (rotation * mean1);
  return out;
}

}  // namespace

SimilarityEstimate estimate_similarity(const CorrespondenceSet& corr,
                                       const RansacParams& params) {
  std::vector<PosePair> pairs = corr.pairs;
  std::sort(pairs.begin(), pairs.end(), [](const PosePair& a, const PosePair& b) {
    return a.frame1.image_id < b.frame1.image_id;
  });
  const std::size_t n = pairs.size();
  if (n < 3) {
    throw std::invalid_argument("estimate_similarity needs >= 3 correspondences, got " +
                                std::to_string(n));
  }

  std::vector<Eigen::Vector3d> c1(n), c2(n);
  for (std::size_t i = 0; i < n; ++i) {
    c1[i] = pairs[i].frame1.C;
    c2[i] = pairs[i].frame2.C;
  }
  const double diam2 = bounding_diameter(c2);
  const double epsilon = params.threshold_rel * diam2;

  Rng rng(mix_seed(params.seed, 0x5173c4a11));
  SimilarityTransform best_transform;
  std::vector<std::size_t> best_inliers;
  int iterations = 0;
  double needed = params.max_iters;

  const auto count_inliers = [&](const SimilarityTransform& T) {
    std::vector<std::size_t> inliers;
    for (std::size_t k = 0; k < n; ++k) {
      if ((c2[k] - T.apply(c1[k])).norm() <= epsilon) inliers.push_back(k);
    }
    return inliers;
  };

  for (; iterations < params.max_iters && iterations < needed; ++iterations) {
    const std::size_t i = rng.uniform_int(n);
    std::size_t j = rng.uniform_int(n - 1);
    if (j >= i) ++j;

    const double d1 = (c1[i] - c1[j]).norm();
    const double d2 = (c2[i] - c2[j]).norm();
    if (d1 <= 1e-14 * diam2 || d2 <= 1e-14 * diam2) continue;

    SimilarityTransform hyp;
    hyp.s = d2 / d1;
    hyp.q = frame_rotation(pairs[i]);
    hyp.t = c2[i] - hyp.s * (hyp.q * c1[i]);

    auto inliers = count_inliers(hyp);
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best_transform = hyp;
      const double w = static_cast<double>(best_inliers.size()) / static_cast<double>(n);
      if (w >= 1.0) {
        needed = 0;
      } else if (w > 0.0) {
        needed = std::log(1.0 - params.confidence) / std::log(1.0 - w * w);
      }
    }
  }

  const std::size_t min_inliers = std::max(3, params.min_inliers);
  if (best_inliers.size() < min_inliers) {
    throw NoConsensusError("best consensus " + std::to_string(best_inliers.size()) +
                           " below minimum " + std::to_string(min_inliers));
  }

  SimilarityEstimate result;
  result.iterations = iterations;
  result.transform = best_transform;

  // Least-squares refit over the consensus centers with the rotation taken
  // from the inlier relative camera rotations, sanity-checked against their
  // median.
  std::vector<Eigen::Vector3d> in1, in2;
  std::vector<Eigen::Quaterniond> rel_rotations;
  for (std::size_t k : best_inliers) {
    in1.push_back(c1[k]);
    in2.push_back(c2[k]);
    rel_rotations.push_back(frame_rotation(pairs[k]));
  }
  const Eigen::Quaterniond median = median_rotation(rel_rotations);
  const auto refit = refit_with_rotation(in1, in2, mean_rotation(rel_rotations));
  if (refit && rotation_angle(refit->q, median) <= 5.0 * M_PI / 180.0) {
    result.transform = *refit;
    result.refit_accepted = true;
  }

  result.inliers.reserve(best_inliers.size());
  for (std::size_t k : best_inliers) result.inliers.push_back(pairs[k].frame1.image_id);
  return result;
}

LocalReconstruction apply_similarity(const SimilarityTransform& T,
                                     const LocalReconstruction& rec) {
  LocalReconstruction out = rec;
  const Eigen::Quaterniond q_inv = T.q.conjugate();
  for (auto& cam : out.cameras) {
    cam.C = T.apply(cam.C);
    cam.q = (cam.q * q_inv).normalized();
  }
  for (auto& p : out.points) p.xyz = T.apply(p.xyz);
  return out;
}

double mse(const SimilarityTransform& T,
           const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("mse needs at least one pair");
  double sum = 0.0;
  for (const auto& [x1, x2] : pairs) sum += (T.apply(x1) - x2).squaredNorm();
  return std::sqrt(sum) / (2.0 * static_cast<double>(pairs.size()));
}

double msd(double mse_12, double mse_21) {
  if (mse_12 < 0.0 || mse_21 < 0.0) {
    throw std::invalid_argument("msd arguments must be non-negative");
  }
  return std::max(mse_12, mse_21);
}

}  // namespace parsfm
