#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fflogo/core/point_cloud.hpp"

namespace fflogo {

/**
 * @brief Dispersed keypoints chosen by farthest point sampling.
 *
 * `covering_radius` is the largest distance from any unselected point to the
 * selected set at termination — the sampling's coverage guarantee, and the
 * scale used for patch aggregation.
 */
struct KeypointSet {
  std::vector<int> indices;
  std::vector<Eigen::Vector3d> points;
  double covering_radius = 0.0;
};

/**
 * @brief Greedy max-min selection of n keypoints.
 *
 * The set is seeded with the cloud point nearest the geometric centroid;
 * each further pick maximizes the minimum distance to the points already
 * selected. All ties resolve to the lower index, so the result is a pure
 * function of the input order.
 */
inline KeypointSet farthest_point_sample(const PointCloud& cloud, int n) {
  if (n < 1) throw std::invalid_argument("farthest_point_sample: n must be >= 1");
  if (cloud.size() < static_cast<std::size_t>(n))
    throw std::invalid_argument("farthest_point_sample: n exceeds cloud size");

  const int total = static_cast<int>(cloud.size());
  const Eigen::Vector3d c = cloud.centroid();

  int seed = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < total; ++i) {
    const double d2 = (cloud.points[i] - c).squaredNorm();
    if (d2 < best) {
      best = d2;
      seed = i;
    }
  }

  KeypointSet out;
  out.indices.reserve(n);
  out.indices.push_back(seed);

  std::vector<double> min_d2(total);
  for (int i = 0; i < total; ++i)
    min_d2[i] = (cloud.points[i] - cloud.points[seed]).squaredNorm();
  std::vector<char> selected(total, 0);
  selected[seed] = 1;

  while (static_cast<int>(out.indices.size()) < n) {
    int next = -1;
    double far = -1.0;
    for (int i = 0; i < total; ++i) {
      if (selected[i]) continue;
      if (min_d2[i] > far) {
        far = min_d2[i];
        next = i;
      }
    }
    out.indices.push_back(next);
    selected[next] = 1;
    for (int i = 0; i < total; ++i) {
      if (selected[i]) continue;
      const double d2 = (cloud.points[i] - cloud.points[next]).squaredNorm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
    }
  }

  double max_d2 = 0.0;
  for (int i = 0; i < total; ++i)
    if (!selected[i] && min_d2[i] > max_d2) max_d2 = min_d2[i];
  out.covering_radius = std::sqrt(max_d2);

  out.points.reserve(n);
  for (int idx : out.indices) out.points.push_back(cloud.points[idx]);
  return out;
}

}  // namespace fflogo
