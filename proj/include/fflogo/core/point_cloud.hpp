#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fflogo/core/transform.hpp"

namespace fflogo {

/**
 * @brief Ordered set of 3D points (meters) with optional unit normals.
 *
 * When normals are present they run parallel to `points`. `normal_valid[i]`
 * is 0 for points whose neighborhood was too degenerate to orient a plane;
 * such entries keep a unit placeholder so every stored normal stays
 * unit-norm, and consumers must skip them.
 */
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;
  std::vector<std::uint8_t> normal_valid;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !points.empty() && normals.size() == points.size(); }

  Eigen::Vector3d centroid() const {
    if (points.empty()) throw std::invalid_argument("centroid: empty cloud");
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : points) c += p;
    return c / static_cast<double>(points.size());
  }

  /// Throws std::invalid_argument if any container invariant is broken.
  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!points[i].allFinite())
        throw std::invalid_argument("point " + std::to_string(i) + " is not finite");
    }
    if (!normals.empty()) {
      if (normals.size() != points.size())
        throw std::invalid_argument("normals length does not match points");
      if (normal_valid.size() != normals.size())
        throw std::invalid_argument("normal_valid length does not match normals");
      for (std::size_t i = 0; i < normals.size(); ++i) {
        if (!normals[i].allFinite() || std::abs(normals[i].norm() - 1.0) > 1e-6)
          throw std::invalid_argument("normal " + std::to_string(i) + " is not unit length");
      }
    }
  }
};

/// Points p -> Rp + t; normals rotate with R. Validity flags carry over.
inline PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(T.apply(p));
  if (cloud.has_normals()) {
    out.normals.reserve(cloud.normals.size());
    for (const auto& n : cloud.normals) out.normals.push_back(T.rotation * n);
    out.normal_valid = cloud.normal_valid;
  }
  return out;
}

/// Sub-cloud of the given indices, normals included when present.
inline PointCloud select_points(const PointCloud& cloud, const std::vector<int>& indices) {
  PointCloud out;
  out.points.reserve(indices.size());
  const bool with_normals = cloud.has_normals();
  if (with_normals) {
    out.normals.reserve(indices.size());
    out.normal_valid.reserve(indices.size());
  }
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= cloud.size())
      throw std::out_of_range("select_points: index out of range");
    out.points.push_back(cloud.points[idx]);
    if (with_normals) {
      out.normals.push_back(cloud.normals[idx]);
      out.normal_valid.push_back(cloud.normal_valid[idx]);
    }
  }
  return out;
}

}  // namespace fflogo
