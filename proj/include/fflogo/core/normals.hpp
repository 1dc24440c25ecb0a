#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "fflogo/core/kdtree.hpp"
#include "fflogo/core/point_cloud.hpp"

namespace fflogo {

/**
 * @brief Per-point normals from local PCA.
 *
 * For each point the covariance of its k-neighborhood (query point included)
 * is decomposed; the normal is the eigenvector of the smallest eigenvalue,
 * sign-flipped to face the viewpoint (cloud centroid by default). A
 * neighborhood whose two smallest eigenvalues both vanish is collinear or
 * coincident and cannot define a plane: its normal keeps a unit placeholder
 * and `normal_valid` is set to 0 so plane correspondences skip the point.
 *
 * Requires k >= 3 and cloud.size() >= k + 1.
 */
inline PointCloud estimate_normals(const PointCloud& cloud, int k = 20,
                                   const Eigen::Vector3d* viewpoint = nullptr) {
  if (k < 3) throw std::invalid_argument("estimate_normals: k must be >= 3");
  if (cloud.size() < static_cast<std::size_t>(k) + 1)
    throw std::invalid_argument("estimate_normals: cloud needs at least k+1 points");

  const Eigen::Vector3d vp = viewpoint ? *viewpoint : cloud.centroid();
  KdTree tree(cloud);

  PointCloud out;
  out.points = cloud.points;
  out.normals.assign(cloud.size(), Eigen::Vector3d::UnitZ());
  out.normal_valid.assign(cloud.size(), 0);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = tree.knn(cloud.points[i], k + 1);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int j : nbrs) mean += cloud.points[j];
    mean /= static_cast<double>(nbrs.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int j : nbrs) {
      const Eigen::Vector3d d = cloud.points[j] - mean;
      cov += d * d.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
    // Collinear/coincident: the mid eigenvalue is numerically zero relative
    // to the spread of the neighborhood.
    if (evals[2] <= 0.0 || evals[1] <= 1e-12 + 1e-9 * evals[2]) continue;

    Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
    const double facing = n.dot(vp - cloud.points[i]);
    if (facing < 0.0) {
      n = -n;
    } else if (facing == 0.0) {
      // Viewpoint lies in the tangent plane; pick a canonical sign.
      if (n.z() < 0.0 || (n.z() == 0.0 && (n.y() < 0.0 || (n.y() == 0.0 && n.x() < 0.0))))
        n = -n;
    }
    out.normals[i] = n;
    out.normal_valid[i] = 1;
  }
  return out;
}

}  // namespace fflogo
