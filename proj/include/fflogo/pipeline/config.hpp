#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fflogo/filter/embedding.hpp"

namespace fflogo {

/// Configuration problem, naming the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/**
 * @brief All pipeline hyperparameters.
 *
 * Defaults: 0.05 m voxels, 8 keypoints, patch radius 1.5x the keypoint
 * covering radius, mutual top-k schedule k=1/2/3 stepping at 1000 and 2500
 * candidates, recall thresholds 15 degrees / 0.3 m. Distance-like knobs
 * (descriptor radius, gates, consensus threshold) scale with the voxel size.
 */
struct PipelineConfig {
  double voxel_size = 0.05;
  int normals_k = 20;

  // Structure-embedding knobs; sigma_d tracks 4 x voxel_size by default.
  double sigma_d = 0.2;
  double sigma_a_deg = 15.0;
  int embedding_dim = 64;
  int k_angular = 3;

  std::string extractor = "classical-descriptor";
  double descriptor_radius_factor = 6.0;  // x voxel_size
  int descriptor_max_neighbors = 64;
  int attention_anchors = 128;
  int attention_blocks = 2;

  // k for mutual top-k by candidate-match count: first entry whose bound
  // covers the count wins; k_above applies past the last bound.
  std::vector<std::pair<int, int>> topk_schedule = {{1000, 1}, {2500, 2}};
  int topk_above = 3;

  int keypoints = 8;
  double patch_radius_factor = 1.5;
  int patch_min_points = 10;
  std::string patch_mode = "radius";
  int patch_knn_cap = 512;

  int local_max_iterations = 50;
  double local_twist_tolerance = 1e-6;
  double distance_gate_factor = 3.0;  // x voxel_size
  int plane_candidates = 5;
  int min_correspondences = 6;

  bool consensus = true;
  int consensus_iterations = 1024;
  double consensus_inlier_factor = 3.0;  // x voxel_size

  double re_threshold_deg = 15.0;
  double te_threshold_m = 0.3;

  std::uint64_t seed = 42;

  int topk_for(int candidate_matches) const {
    for (const auto& [bound, k] : topk_schedule)
      if (candidate_matches <= bound) return k;
    return topk_above;
  }

  EmbeddingConfig embedding_config() const {
    EmbeddingConfig e;
    e.sigma_d = sigma_d;
    e.sigma_a = sigma_a_deg * M_PI / 180.0;
    e.dim = embedding_dim;
    e.k_angular = k_angular;
    return e;
  }

  void validate() const {
    auto positive = [](double v, const char* field) {
      if (!(v > 0.0)) throw ConfigError(std::string(field) + " must be > 0");
    };
    positive(voxel_size, "voxel_size");
    if (normals_k < 3) throw ConfigError("normals_k must be >= 3");
    try {
      embedding_config().validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (extractor != "classical-descriptor" && extractor != "seeded-attention")
      throw ConfigError("extractor must be 'classical-descriptor' or 'seeded-attention'");
    positive(descriptor_radius_factor, "descriptor_radius_factor");
    if (descriptor_max_neighbors < 1) throw ConfigError("descriptor_max_neighbors must be >= 1");
    if (attention_anchors < 1) throw ConfigError("attention_anchors must be >= 1");
    if (attention_blocks < 1) throw ConfigError("attention_blocks must be >= 1");
    if (topk_schedule.empty()) throw ConfigError("topk_schedule must not be empty");
    int prev_bound = 0;
    for (const auto& [bound, k] : topk_schedule) {
      if (bound <= prev_bound) throw ConfigError("topk_schedule bounds must increase");
      if (k < 1) throw ConfigError("topk_schedule k values must be >= 1");
      prev_bound = bound;
    }
    if (topk_above < 1) throw ConfigError("topk_above must be >= 1");
    if (keypoints < 1) throw ConfigError("keypoints must be >= 1");
    positive(patch_radius_factor, "patch_radius_factor");
    if (patch_min_points < 1) throw ConfigError("patch_min_points must be >= 1");
    if (patch_mode != "radius" && patch_mode != "knn")
      throw ConfigError("patch_mode must be 'radius' or 'knn'");
    if (patch_knn_cap < 1) throw ConfigError("patch_knn_cap must be >= 1");
    if (local_max_iterations < 1) throw ConfigError("local_max_iterations must be >= 1");
    positive(local_twist_tolerance, "local_twist_tolerance");
    positive(distance_gate_factor, "distance_gate_factor");
    if (plane_candidates < 1) throw ConfigError("plane_candidates must be >= 1");
    if (min_correspondences < 6) throw ConfigError("min_correspondences must be >= 6");
    if (consensus_iterations < 1) throw ConfigError("consensus_iterations must be >= 1");
    positive(consensus_inlier_factor, "consensus_inlier_factor");
    positive(re_threshold_deg, "re_threshold_deg");
    positive(te_threshold_m, "te_threshold_m");
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                                const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config field '" + (scope.empty() ? key : scope + "." + key) + "'");
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + (scope.empty() ? key : scope + "." + key) +
                      "' has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["voxel_size"] = c.voxel_size;
  j["normals_k"] = c.normals_k;
  j["embedding"] = {{"sigma_d", c.sigma_d},
                    {"sigma_a_deg", c.sigma_a_deg},
                    {"dim", c.embedding_dim},
                    {"k_angular", c.k_angular}};
  j["extractor"] = c.extractor;
  j["descriptor_radius_factor"] = c.descriptor_radius_factor;
  j["descriptor_max_neighbors"] = c.descriptor_max_neighbors;
  j["attention_anchors"] = c.attention_anchors;
  j["attention_blocks"] = c.attention_blocks;
  nlohmann::json schedule = nlohmann::json::array();
  for (const auto& [bound, k] : c.topk_schedule) schedule.push_back({{"max_matches", bound}, {"k", k}});
  j["topk_schedule"] = schedule;
  j["topk_above"] = c.topk_above;
  j["keypoints"] = c.keypoints;
  j["patch_radius_factor"] = c.patch_radius_factor;
  j["patch_min_points"] = c.patch_min_points;
  j["patch_mode"] = c.patch_mode;
  j["patch_knn_cap"] = c.patch_knn_cap;
  j["local_max_iterations"] = c.local_max_iterations;
  j["local_twist_tolerance"] = c.local_twist_tolerance;
  j["distance_gate_factor"] = c.distance_gate_factor;
  j["plane_candidates"] = c.plane_candidates;
  j["min_correspondences"] = c.min_correspondences;
  j["consensus"] = c.consensus;
  j["consensus_iterations"] = c.consensus_iterations;
  j["consensus_inlier_factor"] = c.consensus_inlier_factor;
  j["re_threshold_deg"] = c.re_threshold_deg;
  j["te_threshold_m"] = c.te_threshold_m;
  j["seed"] = c.seed;
  return j;
}

/// Parses and validates a config object; unknown fields are rejected by name.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  detail::reject_unknown_keys(
      j,
      {"voxel_size", "normals_k", "embedding", "extractor", "descriptor_radius_factor",
       "descriptor_max_neighbors", "attention_anchors", "attention_blocks", "topk_schedule",
       "topk_above", "keypoints", "patch_radius_factor", "patch_min_points", "patch_mode",
       "patch_knn_cap", "local_max_iterations", "local_twist_tolerance", "distance_gate_factor",
       "plane_candidates", "min_correspondences", "consensus", "consensus_iterations",
       "consensus_inlier_factor", "re_threshold_deg", "te_threshold_m", "seed"},
      "");

  PipelineConfig c;
  detail::read_field(j, "voxel_size", c.voxel_size, "");
  detail::read_field(j, "normals_k", c.normals_k, "");
  if (j.contains("embedding")) {
    const auto& e = j.at("embedding");
    if (!e.is_object()) throw ConfigError("config field 'embedding' must be an object");
    detail::reject_unknown_keys(e, {"sigma_d", "sigma_a_deg", "dim", "k_angular"}, "embedding");
    detail::read_field(e, "sigma_d", c.sigma_d, "embedding");
    detail::read_field(e, "sigma_a_deg", c.sigma_a_deg, "embedding");
    detail::read_field(e, "dim", c.embedding_dim, "embedding");
    detail::read_field(e, "k_angular", c.k_angular, "embedding");
  }
  detail::read_field(j, "extractor", c.extractor, "");
  detail::read_field(j, "descriptor_radius_factor", c.descriptor_radius_factor, "");
  detail::read_field(j, "descriptor_max_neighbors", c.descriptor_max_neighbors, "");
  detail::read_field(j, "attention_anchors", c.attention_anchors, "");
  detail::read_field(j, "attention_blocks", c.attention_blocks, "");
  if (j.contains("topk_schedule")) {
    const auto& s = j.at("topk_schedule");
    if (!s.is_array()) throw ConfigError("config field 'topk_schedule' must be an array");
    c.topk_schedule.clear();
    for (const auto& entry : s) {
      if (!entry.is_object()) throw ConfigError("topk_schedule entries must be objects");
      detail::reject_unknown_keys(entry, {"max_matches", "k"}, "topk_schedule[]");
      int bound = 0, k = 0;
      detail::read_field(entry, "max_matches", bound, "topk_schedule[]");
      detail::read_field(entry, "k", k, "topk_schedule[]");
      c.topk_schedule.emplace_back(bound, k);
    }
  }
  detail::read_field(j, "topk_above", c.topk_above, "");
  detail::read_field(j, "keypoints", c.keypoints, "");
  detail::read_field(j, "patch_radius_factor", c.patch_radius_factor, "");
  detail::read_field(j, "patch_min_points", c.patch_min_points, "");
  detail::read_field(j, "patch_mode", c.patch_mode, "");
  detail::read_field(j, "patch_knn_cap", c.patch_knn_cap, "");
  detail::read_field(j, "local_max_iterations", c.local_max_iterations, "");
  detail::read_field(j, "local_twist_tolerance", c.local_twist_tolerance, "");
  detail::read_field(j, "distance_gate_factor", c.distance_gate_factor, "");
  detail::read_field(j, "plane_candidates", c.plane_candidates, "");
  detail::read_field(j, "min_correspondences", c.min_correspondences, "");
  detail::read_field(j, "consensus", c.consensus, "");
  detail::read_field(j, "consensus_iterations", c.consensus_iterations, "");
  detail::read_field(j, "consensus_inlier_factor", c.consensus_inlier_factor, "");
  detail::read_field(j, "re_threshold_deg", c.re_threshold_deg, "");
  detail::read_field(j, "te_threshold_m", c.te_threshold_m, "");
  detail::read_field(j, "seed", c.seed, "");
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON (" + e.what() + ")");
  }
  return config_from_json(j);
}

}  // namespace fflogo
