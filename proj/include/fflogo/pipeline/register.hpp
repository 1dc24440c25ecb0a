#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fflogo/core/kdtree.hpp"
#include "fflogo/core/normals.hpp"
#include "fflogo/core/point_cloud.hpp"
#include "fflogo/core/transform.hpp"
#include "fflogo/core/voxel_grid.hpp"
#include "fflogo/filter/coarse_align.hpp"
#include "fflogo/filter/correlation.hpp"
#include "fflogo/filter/feature_extractor.hpp"
#include "fflogo/io/transform_io.hpp"
#include "fflogo/keyregion/fps.hpp"
#include "fflogo/keyregion/patches.hpp"
#include "fflogo/optim/fusion.hpp"
#include "fflogo/optim/point_to_plane.hpp"
#include "fflogo/pipeline/config.hpp"

namespace fflogo {

enum class Stage {
  downsample,
  normals,
  features,
  correlation,
  filtering,
  coarse,
  keyregion,
  local_opt,
  fusion
};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::downsample: return "downsample";
    case Stage::normals: return "normals";
    case Stage::features: return "features";
    case Stage::correlation: return "correlation";
    case Stage::filtering: return "filtering";
    case Stage::coarse: return "coarse";
    case Stage::keyregion: return "keyregion";
    case Stage::local_opt: return "local-opt";
    case Stage::fusion: return "fusion";
  }
  return "unknown";
}

/// Pipeline failure annotated with the stage that raised it.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(Stage stage, const std::string& what)
      : std::runtime_error(std::string(stage_name(stage)) + ": " + what), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

/// Which refinement runs after feature filtering.
enum class RefinementMode { ff_only, global_only, local_global };

inline const char* mode_name(RefinementMode m) {
  switch (m) {
    case RefinementMode::ff_only: return "ff";
    case RefinementMode::global_only: return "ff+go";
    case RefinementMode::local_global: return "ff+logo";
  }
  return "unknown";
}

struct RegistrationResult {
  RigidTransform coarse;
  RigidTransform final_transform;
  std::vector<LocalSolveResult> locals;
  FusionResult fusion;
  RefinementMode mode = RefinementMode::local_global;

  struct Diagnostics {
    std::size_t source_size = 0, target_size = 0;
    std::size_t source_down_size = 0, target_down_size = 0;
    std::size_t source_features = 0, target_features = 0;
    std::size_t correspondences = 0;
    int k_used = 0;
    bool k_fallback = false;
    std::size_t filtered_source_size = 0, filtered_target_size = 0;
    int patches_total = 0, patches_skipped = 0;
    double wall_ms = 0.0;
  } diagnostics;

  KeypointSet keypoints;
  CorrespondenceSet correspondences;  // downsampled-cloud indices
  std::vector<int> filtered_source, filtered_target;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["mode"] = mode_name(mode);
    j["coarse_transform"] = transform_to_json(coarse);
    j["final_transform"] = transform_to_json(final_transform);
    nlohmann::json local_arr = nlohmann::json::array();
    for (const auto& l : locals) {
      local_arr.push_back({{"patch", l.patch_id},
                           {"transform", transform_to_json(l.transform)},
                           {"rms", l.rms},
                           {"iterations", l.iterations},
                           {"converged", l.converged},
                           {"excluded", l.excluded},
                           {"exclude_reason", l.exclude_reason}});
    }
    j["local_solves"] = local_arr;
    j["fusion"] = {{"degraded", fusion.degraded},
                   {"used_patches", fusion.used_patches},
                   {"note", fusion.note}};
    j["diagnostics"] = {{"source_size", diagnostics.source_size},
                        {"target_size", diagnostics.target_size},
                        {"source_down_size", diagnostics.source_down_size},
                        {"target_down_size", diagnostics.target_down_size},
                        {"source_features", diagnostics.source_features},
                        {"target_features", diagnostics.target_features},
                        {"correspondences", diagnostics.correspondences},
                        {"k_used", diagnostics.k_used},
                        {"k_fallback", diagnostics.k_fallback},
                        {"filtered_source_size", diagnostics.filtered_source_size},
                        {"filtered_target_size", diagnostics.filtered_target_size},
                        {"patches_total", diagnostics.patches_total},
                        {"patches_skipped", diagnostics.patches_skipped}};
    j["timing"] = {{"wall_ms", diagnostics.wall_ms}};
    return j;
  }
};

namespace detail {

inline std::unique_ptr<FeatureExtractor> make_extractor(const PipelineConfig& config) {
  if (config.extractor == "classical-descriptor") {
    LocalHistogramExtractor::Params p;
    p.radius = config.descriptor_radius_factor * config.voxel_size;
    p.max_neighbors = config.descriptor_max_neighbors;
    p.normals_k = config.normals_k;
    return std::make_unique<LocalHistogramExtractor>(p);
  }
  SeededAttentionExtractor::Params p;
  p.embedding = config.embedding_config();
  p.anchors = config.attention_anchors;
  p.blocks = config.attention_blocks;
  p.seed = config.seed;
  return std::make_unique<SeededAttentionExtractor>(p);
}

}  // namespace detail

/**
 * @brief Full cross-modality registration pipeline.
 *
 * Both clouds are voxel-downsampled to comparable density and given PCA
 * normals; per-point descriptors are matched through the Gaussian
 * correlation matrix and mutual top-k filtering (retried once with k+1 when
 * empty); the surviving weighted correspondences give the coarse transform.
 * Depending on `mode`, the coarse estimate is returned as-is, refined by a
 * single global point-to-plane solve, or refined patch-wise around farthest
 * point sampled keypoints and fused back into one transform via rigid least
 * squares over the keypoints' locally optimized images.
 *
 * The returned transform maps source coordinates into the target frame.
 * Failures carry the stage that raised them as a PipelineError.
 */
inline RegistrationResult ff_logo_register(const PointCloud& source, const PointCloud& target,
                                           const PipelineConfig& config,
                                           RefinementMode mode = RefinementMode::local_global) {
  config.validate();
  if (source.empty()) throw PipelineError(Stage::downsample, "source cloud is empty");
  if (target.empty()) throw PipelineError(Stage::downsample, "target cloud is empty");

  const auto t_start = std::chrono::steady_clock::now();
  RegistrationResult result;
  result.mode = mode;
  result.diagnostics.source_size = source.size();
  result.diagnostics.target_size = target.size();

  // Density normalization.
  PointCloud source_down, target_down;
  try {
    source_down = voxel_downsample(source, config.voxel_size);
    target_down = voxel_downsample(target, config.voxel_size);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::downsample, e.what());
  }
  result.diagnostics.source_down_size = source_down.size();
  result.diagnostics.target_down_size = target_down.size();

  // Normals on the density-normalized clouds.
  try {
    const int k_src = std::min<int>(config.normals_k, static_cast<int>(source_down.size()) - 1);
    const int k_tgt = std::min<int>(config.normals_k, static_cast<int>(target_down.size()) - 1);
    source_down = estimate_normals(source_down, k_src);
    target_down = estimate_normals(target_down, k_tgt);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::normals, e.what());
  }

  // Per-point descriptors.
  FeatureSet source_feat, target_feat;
  try {
    const auto extractor = detail::make_extractor(config);
    source_feat = extract_features(source_down, *extractor);
    target_feat = extract_features(target_down, *extractor);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::features, e.what());
  }
  result.diagnostics.source_features = source_feat.count();
  result.diagnostics.target_features = target_feat.count();

  Eigen::MatrixXd similarity;
  try {
    similarity = gaussian_correlation(source_feat, target_feat);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::correlation, e.what());
  }

  // Mutual top-k with a one-shot fallback to a larger k.
  FilterResult filtered;
  try {
    const int candidates =
        static_cast<int>(std::min(source_feat.count(), target_feat.count()));
    const int k = config.topk_for(candidates);
    filtered = filter_correspondences(similarity, source_feat, target_feat, k);
    if (filtered.correspondences.empty()) {
      filtered = filter_correspondences(similarity, source_feat, target_feat, k + 1);
      result.diagnostics.k_fallback = true;
    }
    if (filtered.correspondences.empty())
      throw std::runtime_error("no mutual correspondences survived filtering");
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(Stage::filtering, e.what());
  }
  result.correspondences = filtered.correspondences;
  result.filtered_source = filtered.kept_source;
  result.filtered_target = filtered.kept_target;
  result.diagnostics.correspondences = filtered.correspondences.size();
  result.diagnostics.k_used = filtered.k_used;
  result.diagnostics.filtered_source_size = filtered.kept_source.size();
  result.diagnostics.filtered_target_size = filtered.kept_target.size();

  // Coarse estimate from the weighted survivors.
  try {
    CoarseAlignOptions opts;
    opts.consensus = config.consensus;
    opts.consensus_iterations = config.consensus_iterations;
    opts.inlier_threshold = config.consensus_inlier_factor * config.voxel_size;
    opts.seed = config.seed;
    result.coarse = coarse_transform(filtered.correspondences, source_down, target_down, opts);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::coarse, e.what());
  }
  result.final_transform = result.coarse;

  if (mode == RefinementMode::ff_only) {
    result.diagnostics.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    return result;
  }

  // The filtered target keeps the downsampled cloud's normals.
  const PointCloud target_filtered = select_points(target_down, filtered.kept_target);
  LocalSolveOptions solve_opts;
  solve_opts.max_iterations = config.local_max_iterations;
  solve_opts.twist_tolerance = config.local_twist_tolerance;
  solve_opts.distance_gate = config.distance_gate_factor * config.voxel_size;
  solve_opts.plane_candidates = config.plane_candidates;
  solve_opts.min_correspondences = config.min_correspondences;

  std::optional<KdTree> target_tree;
  try {
    target_tree.emplace(target_filtered);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::local_opt, e.what());
  }

  if (mode == RefinementMode::global_only) {
    // One point-to-plane solve over the whole downsampled source.
    const auto solved =
        local_patch_optimize(source_down, target_filtered, *target_tree, result.coarse,
                             solve_opts, 0);
    result.locals.push_back(solved);
    if (solved.converged && !solved.excluded) {
      result.final_transform = solved.transform;
    } else {
      result.fusion.degraded = true;
      result.fusion.note = "global refinement did not converge; using coarse transform";
    }
    result.diagnostics.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    return result;
  }

  // Key regions over the downsampled source.
  PatchSet patches;
  try {
    const int n_keys = std::min<int>(config.keypoints, static_cast<int>(source_down.size()));
    result.keypoints = farthest_point_sample(source_down, n_keys);
    PatchOptions patch_opts;
    patch_opts.radius_factor = config.patch_radius_factor;
    patch_opts.min_points = config.patch_min_points;
    patch_opts.mode = config.patch_mode == "knn" ? PatchMode::knn : PatchMode::radius;
    patch_opts.knn_cap = config.patch_knn_cap;
    patches = aggregate_patches(source_down, result.keypoints, patch_opts);
  } catch (const std::exception& e) {
    throw PipelineError(Stage::keyregion, e.what());
  }
  result.diagnostics.patches_total = static_cast<int>(patches.patches.size());

  for (const auto& patch : patches.patches) {
    if (patch.too_small) {
      LocalSolveResult skipped;
      skipped.patch_id = patch.keypoint_ordinal;
      skipped.excluded = true;
      skipped.exclude_reason = "patch below minimum size";
      result.locals.push_back(skipped);
      ++result.diagnostics.patches_skipped;
      continue;
    }
    result.locals.push_back(local_patch_optimize(patch.cloud, target_filtered, *target_tree,
                                                 result.coarse, solve_opts,
                                                 patch.keypoint_ordinal));
    if (result.locals.back().excluded) ++result.diagnostics.patches_skipped;
  }

  result.fusion = global_fuse(result.keypoints, result.locals, result.coarse);
  result.final_transform = result.fusion.transform;
  result.diagnostics.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace fflogo
