#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "fflogo/core/point_cloud.hpp"

namespace fflogo {

namespace detail {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint64_t v : {static_cast<std::uint64_t>(k.x), static_cast<std::uint64_t>(k.y),
                            static_cast<std::uint64_t>(k.z)}) {
      h ^= v;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

/**
 * @brief Density normalization on a regular grid.
 *
 * Emits one point per occupied voxel: the centroid of the voxel's members.
 * Output order is the first-occurrence order of voxels, which keeps the
 * result independent of hash layout. Normals are dropped; estimate them on
 * the downsampled cloud. Idempotent for a fixed voxel size, since each
 * centroid stays inside its own voxel.
 */
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_downsample: voxel_size must be > 0");

  struct Accum {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::size_t count = 0;
    std::size_t order = 0;
  };
  std::unordered_map<detail::VoxelKey, Accum, detail::VoxelKeyHash> grid;
  grid.reserve(cloud.size());

  for (const auto& p : cloud.points) {
    detail::VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                         static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                         static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
    auto [it, inserted] = grid.try_emplace(key);
    if (inserted) it->second.order = grid.size() - 1;
    it->second.sum += p;
    it->second.count += 1;
  }

  PointCloud out;
  out.points.resize(grid.size());
  for (const auto& [key, acc] : grid)
    out.points[acc.order] = acc.sum / static_cast<double>(acc.count);
  return out;
}

}  // namespace fflogo
