#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fflogo/core/point_cloud.hpp"
#include "fflogo/core/transform.hpp"
#include "fflogo/detail/rng.hpp"
#include "fflogo/filter/correlation.hpp"

namespace fflogo {

/**
 * @brief Weighted rigid least squares (Kabsch).
 *
 * Minimizes sum_i w_i |R p_i + t - q_i|^2 in closed form: weighted centroid
 * subtraction, SVD of the 3x3 cross-covariance, determinant-corrected
 * rotation. Returns nullopt when the correspondence geometry is
 * rank-deficient (collinear or coincident points leave the rotation
 * underdetermined).
 */
inline std::optional<RigidTransform> estimate_rigid(const std::vector<Eigen::Vector3d>& src,
                                                    const std::vector<Eigen::Vector3d>& dst,
                                                    const std::vector<double>* weights = nullptr) {
  if (src.size() != dst.size()) throw std::invalid_argument("estimate_rigid: size mismatch");
  if (weights && weights->size() != src.size())
    throw std::invalid_argument("estimate_rigid: weight count mismatch");
  if (src.size() < 3) return std::nullopt;

  double wsum = 0.0;
  Eigen::Vector3d mu_src = Eigen::Vector3d::Zero(), mu_dst = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    if (w < 0.0) throw std::invalid_argument("estimate_rigid: negative weight");
    wsum += w;
    mu_src += w * src[i];
    mu_dst += w * dst[i];
  }
  if (wsum <= 0.0) return std::nullopt;
  mu_src /= wsum;
  mu_dst /= wsum;

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    cross += w * (src[i] - mu_src) * (dst[i] - mu_dst).transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sigma = svd.singularValues();
  // Two near-zero singular values mean the points are essentially collinear.
  if (sigma[0] <= 0.0 || sigma[1] <= sigma[0] * 1e-12) return std::nullopt;

  Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) flip(2, 2) = -1.0;
  const Eigen::Matrix3d R = svd.matrixV() * flip * svd.matrixU().transpose();
  return RigidTransform{R, mu_dst - R * mu_src};
}

struct CoarseAlignOptions {
  bool consensus = true;
  int consensus_iterations = 512;
  double inlier_threshold = 0.15;  // meters; pipeline sets 3 x voxel_size
  std::uint64_t seed = 0;
};

/**
 * @brief Coarse transform from weighted correspondences.
 *
 * A similarity-weighted Kabsch fit, optionally wrapped in a seeded
 * three-point consensus loop: the minimal-sample transform retaining the
 * most inliers under the distance threshold wins, and the final transform
 * is the weighted fit over its inliers. Throws std::invalid_argument on
 * fewer than 3 pairs and std::runtime_error on degenerate geometry.
 */
inline RigidTransform coarse_transform(const CorrespondenceSet& corr, const PointCloud& source,
                                       const PointCloud& target,
                                       const CoarseAlignOptions& options = {}) {
  if (corr.size() < 3)
    throw std::invalid_argument("coarse_transform: need at least 3 correspondences");

  std::vector<Eigen::Vector3d> src, dst;
  std::vector<double> weights;
  src.reserve(corr.size());
  dst.reserve(corr.size());
  weights.reserve(corr.size());
  for (const auto& p : corr.pairs) {
    if (p.i < 0 || static_cast<std::size_t>(p.i) >= source.size() || p.j < 0 ||
        static_cast<std::size_t>(p.j) >= target.size())
      throw std::invalid_argument("coarse_transform: correspondence index out of range");
    src.push_back(source.points[p.i]);
    dst.push_back(target.points[p.j]);
    weights.push_back(p.weight);
  }

  auto weighted_fit = [&](const std::vector<int>& subset) -> std::optional<RigidTransform> {
    std::vector<Eigen::Vector3d> s, d;
    std::vector<double> w;
    for (int idx : subset) {
      s.push_back(src[idx]);
      d.push_back(dst[idx]);
      w.push_back(weights[idx]);
    }
    return estimate_rigid(s, d, &w);
  };

  std::vector<int> all(src.size());
  std::iota(all.begin(), all.end(), 0);

  std::vector<int> best_inliers;
  if (options.consensus && src.size() > 3) {
    Rng rng(derive_seed(options.seed, 0xc0a25eULL));
    const double thr2 = options.inlier_threshold * options.inlier_threshold;
    for (int it = 0; it < options.consensus_iterations; ++it) {
      int a = static_cast<int>(rng.uniform_int(src.size()));
      int b = static_cast<int>(rng.uniform_int(src.size()));
      int c = static_cast<int>(rng.uniform_int(src.size()));
      if (a == b || b == c || a == c) continue;
      const auto T = estimate_rigid({src[a], src[b], src[c]}, {dst[a], dst[b], dst[c]});
      if (!T) continue;
      std::vector<int> inliers;
      for (std::size_t i = 0; i < src.size(); ++i)
        if ((T->apply(src[i]) - dst[i]).squaredNorm() <= thr2)
          inliers.push_back(static_cast<int>(i));
      if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
    }
  }

  std::optional<RigidTransform> result;
  if (best_inliers.size() >= 3) result = weighted_fit(best_inliers);
  if (!result) result = weighted_fit(all);
  if (!result) throw std::runtime_error("coarse_transform: rank-deficient correspondence geometry");
  return *result;
}

}  // namespace fflogo
