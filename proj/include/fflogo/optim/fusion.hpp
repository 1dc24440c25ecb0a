#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "fflogo/core/transform.hpp"
#include "fflogo/filter/coarse_align.hpp"
#include "fflogo/keyregion/fps.hpp"
#include "fflogo/optim/point_to_plane.hpp"

namespace fflogo {

struct FusionResult {
  RigidTransform transform;
  bool degraded = false;      // fallback path was taken
  int used_patches = 0;
  std::string note;
};

/**
 * @brief Fuses per-patch transforms into one global rigid motion.
 *
 * Each converged patch maps its keypoint a_i to b_i = T_i(a_i); the fused
 * transform is the unweighted rigid least-squares fit over those keypoint
 * pairs. With fewer than three usable patches, or keypoints too collinear
 * for a well-posed fit, the result degrades to the lowest-residual local
 * transform (or the supplied coarse transform when nothing converged).
 */
inline FusionResult global_fuse(const KeypointSet& keys,
                                const std::vector<LocalSolveResult>& locals,
                                const RigidTransform& coarse) {
  std::vector<Eigen::Vector3d> a, b;
  int usable = 0;
  for (const auto& local : locals) {
    if (!local.converged || local.excluded) continue;
    if (local.patch_id < 0 || local.patch_id >= static_cast<int>(keys.points.size())) continue;
    const Eigen::Vector3d key = keys.points[local.patch_id];
    a.push_back(key);
    b.push_back(local.transform.apply(key));
    ++usable;
  }

  auto fallback = [&](const std::string& why) {
    FusionResult out;
    out.degraded = true;
    out.note = why;
    const LocalSolveResult* best = nullptr;
    for (const auto& local : locals) {
      if (!local.converged || local.excluded) continue;
      if (!best || local.rms < best->rms) best = &local;
    }
    if (best) {
      out.transform = best->transform;
      out.used_patches = 1;
      out.note += "; using best local transform";
    } else {
      out.transform = coarse;
      out.note += "; using coarse transform";
    }
    return out;
  };

  if (usable < 3) return fallback("fewer than 3 converged patches");

  const auto fused = estimate_rigid(a, b);
  if (!fused) return fallback("keypoints too collinear for a rigid fit");

  FusionResult out;
  out.transform = *fused;
  out.used_patches = usable;
  return out;
}

}  // namespace fflogo
