#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fflogo/core/point_cloud.hpp"
#include "fflogo/core/transform.hpp"
#include "fflogo/detail/rng.hpp"
#include "fflogo/io/cloud_io.hpp"
#include "fflogo/io/transform_io.hpp"

namespace fflogo::synth {

/**
 * @brief Degradation recipe for one simulated sensor modality: density
 * thinning, half-space cropping (partial view), isotropic Gaussian noise
 * and uniform box outliers.
 */
struct ModalitySpec {
  double density_keep = 1.0;     // (0, 1]
  double noise_sigma = 0.0;      // meters
  double overlap = 1.0;          // (0, 1] fraction kept by the crop
  double outlier_fraction = 0.0; // [0, 1) of the surviving count
  double outlier_scale = 0.2;    // meters beyond the bounding box

  void validate() const {
    if (!(density_keep > 0.0 && density_keep <= 1.0))
      throw std::invalid_argument("density_keep must be in (0, 1]");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    if (!(overlap > 0.0 && overlap <= 1.0))
      throw std::invalid_argument("overlap must be in (0, 1]");
    if (outlier_fraction < 0.0 || outlier_fraction >= 1.0)
      throw std::invalid_argument("outlier_fraction must be in [0, 1)");
    if (outlier_scale < 0.0) throw std::invalid_argument("outlier_scale must be >= 0");
  }
};

enum class BaseShape { plane_grid, box, sphere, wavy_surface, composite_room };

inline BaseShape shape_from_name(const std::string& name) {
  if (name == "plane-grid") return BaseShape::plane_grid;
  if (name == "box") return BaseShape::box;
  if (name == "sphere") return BaseShape::sphere;
  if (name == "wavy-surface") return BaseShape::wavy_surface;
  if (name == "composite-room") return BaseShape::composite_room;
  throw std::invalid_argument("unknown shape '" + name + "'");
}

inline const char* shape_name(BaseShape s) {
  switch (s) {
    case BaseShape::plane_grid: return "plane-grid";
    case BaseShape::box: return "box";
    case BaseShape::sphere: return "sphere";
    case BaseShape::wavy_surface: return "wavy-surface";
    case BaseShape::composite_room: return "composite-room";
  }
  return "unknown";
}

namespace detail {

// Uniform sample on an origin-cornered rectangle spanned by two edges.
inline Eigen::Vector3d sample_rect(Rng& rng, const Eigen::Vector3d& corner,
                                   const Eigen::Vector3d& edge_u, const Eigen::Vector3d& edge_v) {
  return corner + rng.uniform() * edge_u + rng.uniform() * edge_v;
}

struct Face {
  Eigen::Vector3d corner, edge_u, edge_v;
  double area() const { return edge_u.cross(edge_v).norm(); }
};

inline PointCloud sample_faces(const std::vector<Face>& faces, int count, Rng& rng) {
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& f : faces) {
    total += f.area();
    cumulative.push_back(total);
  }
  PointCloud cloud;
  cloud.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double pick = rng.uniform() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
    const auto& f = faces[std::min<std::size_t>(it - cumulative.begin(), faces.size() - 1)];
    cloud.points.push_back(sample_rect(rng, f.corner, f.edge_u, f.edge_v));
  }
  return cloud;
}

}  // namespace detail

/**
 * @brief Deterministic base cloud for a (shape, points, seed) triple.
 *
 * The composite room mixes planes at several orientations (floor, two
 * walls, a tilted panel) plus a table block, all placed asymmetrically so
 * surface normals span 3D and the scene has no self-symmetry.
 */
inline PointCloud generate_base(BaseShape shape, int points, std::uint64_t seed) {
  if (points < 100) throw std::invalid_argument("generate_base: need at least 100 points");
  Rng rng(derive_seed(seed, 0xba5e0001ULL));
  PointCloud cloud;
  cloud.points.reserve(points);

  switch (shape) {
    case BaseShape::plane_grid: {
      const int side = static_cast<int>(std::ceil(std::sqrt(double(points))));
      for (int i = 0; i < points; ++i) {
        const int r = i / side, c = i % side;
        cloud.points.emplace_back(double(c) / (side - 1), double(r) / (side - 1), 0.0);
      }
      break;
    }
    case BaseShape::box: {
      const Eigen::Vector3d e(1.0, 0.7, 0.45);
      std::vector<detail::Face> faces = {
          {{0, 0, 0}, {e.x(), 0, 0}, {0, e.y(), 0}},      {{0, 0, e.z()}, {e.x(), 0, 0}, {0, e.y(), 0}},
          {{0, 0, 0}, {e.x(), 0, 0}, {0, 0, e.z()}},      {{0, e.y(), 0}, {e.x(), 0, 0}, {0, 0, e.z()}},
          {{0, 0, 0}, {0, e.y(), 0}, {0, 0, e.z()}},      {{e.x(), 0, 0}, {0, e.y(), 0}, {0, 0, e.z()}}};
      cloud = detail::sample_faces(faces, points, rng);
      break;
    }
    case BaseShape::sphere: {
      for (int i = 0; i < points; ++i) cloud.points.push_back(rng.unit_vector3());
      break;
    }
    case BaseShape::wavy_surface: {
      for (int i = 0; i < points; ++i) {
        const double x = rng.uniform(0.0, 2.0), y = rng.uniform(0.0, 2.0);
        const double z = 0.25 * std::sin(2.1 * x + 0.4) * std::cos(1.3 * y) +
                         0.08 * std::sin(4.7 * x) * std::sin(3.1 * y + 0.9);
        cloud.points.emplace_back(x, y, z);
      }
      break;
    }
    case BaseShape::composite_room: {
      // Distinct wall heights and furniture spread across the room keep the
      // scene asymmetric even after partial-overlap cropping.
      std::vector<detail::Face> faces = {
          // floor 2.2 x 1.8
          {{0, 0, 0}, {2.2, 0, 0}, {0, 1.8, 0}},
          // walls of unequal height
          {{0, 0, 0}, {0, 1.8, 0}, {0, 0, 1.1}},
          {{0, 0, 0}, {2.2, 0, 0}, {0, 0, 0.7}},
          // tilted panel leaning into the room
          {{1.4, 1.1, 0.0}, {0.7, 0.1, 0.0}, {-0.15, -0.3, 0.6}},
          // table block: top and two visible sides
          {{0.4, 0.9, 0.35}, {0.5, 0, 0}, {0, 0.4, 0}},
          {{0.4, 0.9, 0.0}, {0.5, 0, 0}, {0, 0, 0.35}},
          {{0.4, 0.9, 0.0}, {0, 0.4, 0}, {0, 0, 0.35}},
          // tall cabinet near the far corner
          {{1.85, 0.15, 0.9}, {0.25, 0, 0}, {0, 0.3, 0}},
          {{1.85, 0.15, 0.0}, {0.25, 0, 0}, {0, 0, 0.9}},
          {{1.85, 0.15, 0.0}, {0, 0.3, 0}, {0, 0, 0.9}},
          // low platform along the back edge
          {{0.15, 1.45, 0.15}, {0.45, 0, 0}, {0, 0.3, 0}},
          {{0.15, 1.45, 0.0}, {0.45, 0, 0}, {0, 0, 0.15}},
          // small wedge resting mid-floor
          {{1.0, 0.35, 0.0}, {0.35, 0.05, 0.0}, {-0.05, 0.25, 0.3}}};
      cloud = detail::sample_faces(faces, points, rng);
      break;
    }
  }
  return cloud;
}

/**
 * @brief Applies a modality recipe to a cloud, in order: density thinning,
 * half-space crop along `crop_direction`, additive Gaussian noise, outlier
 * injection uniform in the grown bounding box. Counts round to the nearest
 * integer and the selection is a pure function of the seed. Throws when
 * fewer than 100 points survive.
 */
inline PointCloud degrade(const PointCloud& cloud, const ModalitySpec& spec, std::uint64_t seed,
                          const Eigen::Vector3d* crop_direction = nullptr) {
  spec.validate();
  Rng rng(derive_seed(seed, 0xde62adeULL));
  const int n = static_cast<int>(cloud.size());

  // Density: keep exactly round(n * keep) points, chosen by seeded partial
  // shuffle, in their original order.
  std::vector<int> kept(n);
  std::iota(kept.begin(), kept.end(), 0);
  const int keep_count = std::max(1, static_cast<int>(std::llround(spec.density_keep * n)));
  for (int i = 0; i < keep_count && i < n - 1; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(n - i));
    std::swap(kept[i], kept[j]);
  }
  kept.resize(keep_count);
  std::sort(kept.begin(), kept.end());

  // Crop: keep the overlap fraction with the smallest projection onto a
  // seeded (or caller-supplied) direction.
  const Eigen::Vector3d dir = crop_direction ? *crop_direction : rng.unit_vector3();
  const int crop_count = std::max(1, static_cast<int>(std::llround(spec.overlap * keep_count)));
  std::vector<int> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double pa = cloud.points[kept[a]].dot(dir), pb = cloud.points[kept[b]].dot(dir);
    return pa != pb ? pa < pb : kept[a] < kept[b];
  });
  order.resize(crop_count);
  std::sort(order.begin(), order.end());

  PointCloud out;
  out.points.reserve(crop_count);
  for (int o : order) out.points.push_back(cloud.points[kept[o]]);

  if (static_cast<int>(out.size()) < 100)
    throw std::runtime_error("degrade: fewer than 100 points survived");

  if (spec.noise_sigma > 0.0)
    for (auto& p : out.points) p += rng.normal_vector3(spec.noise_sigma);

  if (spec.outlier_fraction > 0.0) {
    const int extra =
        static_cast<int>(std::llround(spec.outlier_fraction * static_cast<double>(out.size())));
    Eigen::Vector3d lo = out.points.front(), hi = lo;
    for (const auto& p : out.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    lo.array() -= spec.outlier_scale;
    hi.array() += spec.outlier_scale;
    for (int i = 0; i < extra; ++i)
      out.points.emplace_back(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                              rng.uniform(lo.z(), hi.z()));
  }
  return out;
}

struct SyntheticPair {
  PointCloud source;        // degraded base, base frame
  PointCloud target;        // degraded base moved by the ground-truth motion
  RigidTransform ground_truth;
  std::uint64_t seed = 0;
  ModalitySpec source_spec, target_spec;
};

/// Seeded rigid motion: uniform rotation axis, angle uniform in
/// [0, max_angle], translation uniform in the ball of radius max_norm.
inline RigidTransform random_transform(Rng& rng, double max_angle_rad, double max_translation) {
  const Eigen::Vector3d axis = rng.unit_vector3();
  const double angle = rng.uniform() * max_angle_rad;
  const Eigen::Vector3d t =
      rng.unit_vector3() * (max_translation * std::cbrt(rng.uniform()));
  return RigidTransform::from_axis_angle(axis, angle, t);
}

/**
 * @brief Builds one registration pair from a shared base cloud.
 *
 * Source and target are independently degraded copies; the target is then
 * moved by a seeded ground-truth transform. The two crop directions are
 * drawn orthogonal to each other, so the joint survival of a base point is
 * close to the product of the two overlap fractions.
 */
inline SyntheticPair generate_pair(const PointCloud& base, const ModalitySpec& source_spec,
                                   const ModalitySpec& target_spec, double max_rotation_deg,
                                   double max_translation, std::uint64_t seed) {
  source_spec.validate();
  target_spec.validate();
  Rng rng(derive_seed(seed, 0x9a12a1ULL));
  const Eigen::Vector3d dir_source = rng.unit_vector3();
  // Any unit vector orthogonal to dir_source, rotated by a seeded angle
  // around it.
  Eigen::Vector3d ref = std::abs(dir_source.z()) < 0.9 ? Eigen::Vector3d::UnitZ()
                                                       : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d ortho = dir_source.cross(ref).normalized();
  const Eigen::Vector3d dir_target =
      Eigen::AngleAxisd(rng.uniform(0.0, 2.0 * M_PI), dir_source).toRotationMatrix() * ortho;

  SyntheticPair pair;
  pair.seed = seed;
  pair.source_spec = source_spec;
  pair.target_spec = target_spec;
  pair.source = degrade(base, source_spec, derive_seed(seed, 1), &dir_source);
  PointCloud target_raw = degrade(base, target_spec, derive_seed(seed, 2), &dir_target);
  pair.ground_truth =
      random_transform(rng, max_rotation_deg * M_PI / 180.0, max_translation);
  pair.target = apply_transform(target_raw, pair.ground_truth);
  return pair;
}

/// Whole-corpus recipe; `shape`/`points` describe the base scene.
struct CorpusSpec {
  int pairs = 50;
  std::uint64_t seed = 7;
  BaseShape shape = BaseShape::composite_room;
  int points = 9000;
  ModalitySpec source_spec{0.2, 0.010, 0.70, 0.05, 0.2};  // sparse, noisy, partial
  ModalitySpec target_spec{1.0, 0.005, 0.85, 0.05, 0.2};  // dense, cleaner
  double max_rotation_deg = 45.0;
  double max_translation = 0.5;

  void validate() const {
    if (pairs < 1) throw std::invalid_argument("pairs must be >= 1");
    if (points < 100) throw std::invalid_argument("points must be >= 100");
    source_spec.validate();
    target_spec.validate();
    if (max_rotation_deg < 0.0) throw std::invalid_argument("max_rotation_deg must be >= 0");
    if (max_translation < 0.0) throw std::invalid_argument("max_translation must be >= 0");
  }
};

inline nlohmann::json modality_to_json(const ModalitySpec& m) {
  return {{"density_keep", m.density_keep},
          {"noise_sigma", m.noise_sigma},
          {"overlap", m.overlap},
          {"outlier_fraction", m.outlier_fraction},
          {"outlier_scale", m.outlier_scale}};
}

inline ModalitySpec modality_from_json(const nlohmann::json& j, const std::string& scope) {
  ModalitySpec m;
  for (const auto& [key, value] : j.items()) {
    if (key == "density_keep") m.density_keep = value.get<double>();
    else if (key == "noise_sigma") m.noise_sigma = value.get<double>();
    else if (key == "overlap") m.overlap = value.get<double>();
    else if (key == "outlier_fraction") m.outlier_fraction = value.get<double>();
    else if (key == "outlier_scale") m.outlier_scale = value.get<double>();
    else throw std::invalid_argument("unknown corpus field '" + scope + "." + key + "'");
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(scope + ": " + e.what());
  }
  return m;
}

inline nlohmann::json corpus_spec_to_json(const CorpusSpec& s) {
  return {{"pairs", s.pairs},
          {"seed", s.seed},
          {"shape", shape_name(s.shape)},
          {"points", s.points},
          {"source", modality_to_json(s.source_spec)},
          {"target", modality_to_json(s.target_spec)},
          {"max_rotation_deg", s.max_rotation_deg},
          {"max_translation", s.max_translation}};
}

inline CorpusSpec corpus_spec_from_json(const nlohmann::json& j) {
  CorpusSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "pairs") s.pairs = value.get<int>();
    else if (key == "seed") s.seed = value.get<std::uint64_t>();
    else if (key == "shape") s.shape = shape_from_name(value.get<std::string>());
    else if (key == "points") s.points = value.get<int>();
    else if (key == "source") s.source_spec = modality_from_json(value, "source");
    else if (key == "target") s.target_spec = modality_from_json(value, "target");
    else if (key == "max_rotation_deg") s.max_rotation_deg = value.get<double>();
    else if (key == "max_translation") s.max_translation = value.get<double>();
    else throw std::invalid_argument("unknown corpus field '" + key + "'");
  }
  s.validate();
  return s;
}

/// Deterministic pair id -> seed mapping within a corpus.
inline std::uint64_t pair_seed(const CorpusSpec& spec, int pair_index) {
  return derive_seed(spec.seed, 0xc02b05ULL + static_cast<std::uint64_t>(pair_index));
}

inline SyntheticPair generate_corpus_pair(const CorpusSpec& spec, int pair_index) {
  const std::uint64_t seed = pair_seed(spec, pair_index);
  const PointCloud base = generate_base(spec.shape, spec.points, derive_seed(seed, 0xba5eULL));
  return generate_pair(base, spec.source_spec, spec.target_spec, spec.max_rotation_deg,
                       spec.max_translation, seed);
}

/**
 * @brief Materializes a corpus: one PLY pair per entry plus manifest.json
 * recording seeds, specs and ground-truth transforms.
 */
inline nlohmann::json write_corpus(const std::string& out_dir, const CorpusSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  nlohmann::json manifest;
  manifest["spec"] = corpus_spec_to_json(spec);
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < spec.pairs; ++i) {
    const auto pair = generate_corpus_pair(spec, i);
    char id[16];
    std::snprintf(id, sizeof(id), "pair_%03d", i);
    const std::string source_file = std::string(id) + "_source.ply";
    const std::string target_file = std::string(id) + "_target.ply";
    save_cloud((fs::path(out_dir) / source_file).string(), pair.source, CloudFormat::ply_ascii);
    save_cloud((fs::path(out_dir) / target_file).string(), pair.target, CloudFormat::ply_ascii);
    entries.push_back({{"id", id},
                       {"seed", pair.seed},
                       {"source", source_file},
                       {"target", target_file},
                       {"ground_truth", transform_to_json(pair.ground_truth)}});
  }
  manifest["pairs"] = entries;

  std::ofstream out((fs::path(out_dir) / "manifest.json").string());
  if (!out) throw std::runtime_error(out_dir + ": cannot write manifest.json");
  out << manifest.dump(2) << "\n";
  return manifest;
}

}  // namespace fflogo::synth
