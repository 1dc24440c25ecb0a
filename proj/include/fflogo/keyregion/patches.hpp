#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fflogo/core/kdtree.hpp"
#include "fflogo/core/point_cloud.hpp"
#include "fflogo/keyregion/fps.hpp"

namespace fflogo {

enum class PatchMode { radius, knn };

struct PatchOptions {
  double radius_factor = 1.5;  // times the keypoint covering radius
  int min_points = 10;         // smaller patches are flagged and skipped downstream
  PatchMode mode = PatchMode::radius;
  int knn_cap = 512;           // knn-mode patch size
};

/// One keypoint's aggregated neighborhood.
struct Patch {
  int keypoint_ordinal = 0;  // position within the KeypointSet
  int keypoint_index = 0;    // index into the source cloud
  std::vector<int> indices;  // member indices into the source cloud
  PointCloud cloud;          // materialized members
  bool too_small = false;
};

struct PatchSet {
  std::vector<Patch> patches;
  double aggregation_radius = 0.0;
};

/**
 * @brief Gathers the local region around every keypoint.
 *
 * Radius mode (default) collects all cloud points within
 * covering_radius * radius_factor of the keypoint, adapting patch size to
 * local density; knn mode takes a fixed count instead. Patches may overlap
 * and always contain their keypoint. Patches under `min_points` are flagged
 * `too_small` and excluded from local optimization.
 */
inline PatchSet aggregate_patches(const PointCloud& cloud, const KeypointSet& keys,
                                  const PatchOptions& options = {},
                                  const KdTree* index = nullptr) {
  if (!(options.radius_factor > 0.0))
    throw std::invalid_argument("aggregate_patches: radius_factor must be > 0");
  if (cloud.empty()) throw std::invalid_argument("aggregate_patches: empty cloud");
  for (int idx : keys.indices)
    if (idx < 0 || static_cast<std::size_t>(idx) >= cloud.size())
      throw std::invalid_argument("aggregate_patches: keypoint index outside cloud");

  std::optional<KdTree> local_index;
  if (!index) local_index.emplace(cloud);
  const KdTree& tree = index ? *index : *local_index;

  PatchSet out;
  out.aggregation_radius = keys.covering_radius * options.radius_factor;
  out.patches.reserve(keys.indices.size());
  for (std::size_t k = 0; k < keys.indices.size(); ++k) {
    Patch patch;
    patch.keypoint_ordinal = static_cast<int>(k);
    patch.keypoint_index = keys.indices[k];
    if (options.mode == PatchMode::radius)
      patch.indices = tree.radius(keys.points[k], out.aggregation_radius);
    else
      patch.indices = tree.knn(keys.points[k], std::min<int>(options.knn_cap,
                                                             static_cast<int>(cloud.size())));
    patch.cloud = select_points(cloud, patch.indices);
    patch.too_small = static_cast<int>(patch.indices.size()) < options.min_points;
    out.patches.push_back(std::move(patch));
  }
  return out;
}

}  // namespace fflogo
