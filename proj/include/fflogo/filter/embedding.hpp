#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fflogo/core/kdtree.hpp"
#include "fflogo/core/point_cloud.hpp"

namespace fflogo {

/**
 * @brief Hyperparameters of the geometric structure embedding.
 *
 * sigma_d scales pairwise distances (meters), sigma_a scales triplet angles
 * (radians), dim is the sinusoidal channel count (even), k_angular the size
 * of the neighbor set used for the angular term.
 */
struct EmbeddingConfig {
  double sigma_d = 0.2;
  double sigma_a = 15.0 * M_PI / 180.0;
  int dim = 64;
  int k_angular = 3;

  void validate() const {
    if (!(sigma_d > 0.0)) throw std::invalid_argument("embedding.sigma_d must be > 0");
    if (!(sigma_a > 0.0)) throw std::invalid_argument("embedding.sigma_a must be > 0");
    if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("embedding.dim must be even and >= 2");
    if (k_angular < 1) throw std::invalid_argument("embedding.k_angular must be >= 1");
  }
};

/// Dense row-major tensor of rank 3 with a vector view over the last axis.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Eigen::Index n0, Eigen::Index n1, Eigen::Index n2)
      : shape_{n0, n1, n2}, data_(static_cast<std::size_t>(n0 * n1 * n2), 0.0) {}

  const std::array<Eigen::Index, 3>& shape() const { return shape_; }
  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index c) {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + c)];
  }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index c) const {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + c)];
  }
  Eigen::Map<Eigen::RowVectorXd> vec(Eigen::Index i, Eigen::Index j) {
    return {data_.data() + (i * shape_[1] + j) * shape_[2], shape_[2]};
  }
  Eigen::Map<const Eigen::RowVectorXd> vec(Eigen::Index i, Eigen::Index j) const {
    return {data_.data() + (i * shape_[1] + j) * shape_[2], shape_[2]};
  }

 private:
  std::array<Eigen::Index, 3> shape_{0, 0, 0};
  std::vector<double> data_;
};

/// Dense row-major tensor of rank 4 with a vector view over the last axis.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(Eigen::Index n0, Eigen::Index n1, Eigen::Index n2, Eigen::Index n3)
      : shape_{n0, n1, n2, n3}, data_(static_cast<std::size_t>(n0 * n1 * n2 * n3), 0.0) {}

  const std::array<Eigen::Index, 4>& shape() const { return shape_; }
  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index x, Eigen::Index c) {
    return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + x) * shape_[3] + c)];
  }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index x, Eigen::Index c) const {
    return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + x) * shape_[3] + c)];
  }
  Eigen::Map<Eigen::RowVectorXd> vec(Eigen::Index i, Eigen::Index j, Eigen::Index x) {
    return {data_.data() + ((i * shape_[1] + j) * shape_[2] + x) * shape_[3], shape_[3]};
  }
  Eigen::Map<const Eigen::RowVectorXd> vec(Eigen::Index i, Eigen::Index j, Eigen::Index x) const {
    return {data_.data() + ((i * shape_[1] + j) * shape_[2] + x) * shape_[3], shape_[3]};
  }

 private:
  std::array<Eigen::Index, 4> shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

namespace detail {

/// Writes interleaved sin/cos channels of x / 10000^(2k/dim) into out[0..dim).
inline void sinusoid_channels(double x, int dim, double* out) {
  for (int k2 = 0; k2 < dim / 2; ++k2) {
    const double arg = x / std::pow(10000.0, 2.0 * k2 / dim);
    out[2 * k2] = std::sin(arg);
    out[2 * k2 + 1] = std::cos(arg);
  }
}

/// Angle between two difference vectors in [0, pi]; atan2 form for stability
/// at both ends of the range.
inline double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace detail

/**
 * @brief Sinusoidal embedding of all pairwise distances.
 *
 * Channel 2k holds sin((d_ij / sigma_d) / 10000^(2k/dim)) and channel 2k+1
 * the matching cosine. Output shape is (n, n, dim). Rigid-invariant because
 * distances are.
 */
inline Tensor3 pairwise_distance_embedding(const PointCloud& cloud, const EmbeddingConfig& cfg) {
  cfg.validate();
  if (cloud.empty()) throw std::invalid_argument("pairwise_distance_embedding: empty cloud");
  const Eigen::Index n = static_cast<Eigen::Index>(cloud.size());
  Tensor3 out(n, n, cfg.dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (cloud.points[i] - cloud.points[j]).norm();
      detail::sinusoid_channels(d / cfg.sigma_d, cfg.dim, &out(i, j, 0));
    }
  }
  return out;
}

/// Angular embedding plus the (i, j, x) triples whose angle was undefined.
struct AngularEmbedding {
  Tensor4 channels;                            // (n, n, k_angular, dim)
  std::vector<std::vector<int>> neighbor_sets; // the k_angular nearest neighbors per point
  std::vector<std::array<int, 3>> degenerate;  // coincident-point triples, angle forced to 0
};

/**
 * @brief Sinusoidal embedding of triplet angles.
 *
 * For each point i, its k_angular nearest neighbors form a reference set;
 * entry (i, j, x) embeds the angle at i between neighbor x and point j,
 * using sigma_a as the scale. A zero-length leg (coincident points) has no
 * angle: it is encoded as 0 and reported in `degenerate`.
 */
inline AngularEmbedding triplet_angular_embedding(const PointCloud& cloud,
                                                  const EmbeddingConfig& cfg) {
  cfg.validate();
  if (cloud.size() <= static_cast<std::size_t>(cfg.k_angular))
    throw std::invalid_argument("triplet_angular_embedding: cloud must exceed k_angular points");
  const Eigen::Index n = static_cast<Eigen::Index>(cloud.size());

  KdTree tree(cloud);
  AngularEmbedding out;
  out.channels = Tensor4(n, n, cfg.k_angular, cfg.dim);
  out.neighbor_sets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto nbrs = tree.knn(cloud.points[i], cfg.k_angular + 1);
    std::erase(nbrs, static_cast<int>(i));
    nbrs.resize(cfg.k_angular);
    out.neighbor_sets[i] = nbrs;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Vector3d to_j = cloud.points[j] - cloud.points[i];
      for (int x = 0; x < cfg.k_angular; ++x) {
        const Eigen::Vector3d to_x = cloud.points[out.neighbor_sets[i][x]] - cloud.points[i];
        double alpha = 0.0;
        if (to_j.norm() < 1e-15 || to_x.norm() < 1e-15)
          out.degenerate.push_back({static_cast<int>(i), static_cast<int>(j), x});
        else
          alpha = detail::angle_between(to_x, to_j);
        detail::sinusoid_channels(alpha / cfg.sigma_a, cfg.dim, &out.channels(i, j, x, 0));
      }
    }
  }
  return out;
}

/**
 * @brief Combines distance and angular embeddings through projections:
 * e_ij = e^D_ij W_D + max_x(e^A_ijx W_A), max taken elementwise.
 */
inline Tensor3 geometric_structure_embedding(const Tensor3& dist, const Tensor4& ang,
                                             const Eigen::MatrixXd& W_D,
                                             const Eigen::MatrixXd& W_A) {
  const auto& ds = dist.shape();
  const auto& as = ang.shape();
  if (ds[0] != as[0] || ds[1] != as[1] || ds[2] != as[3])
    throw std::invalid_argument("geometric_structure_embedding: tensor shapes do not conform");
  if (W_D.rows() != ds[2] || W_D.cols() != ds[2] || W_A.rows() != ds[2] || W_A.cols() != ds[2])
    throw std::invalid_argument("geometric_structure_embedding: projection shape mismatch");

  const Eigen::Index n = ds[0], d = ds[2], ka = as[2];
  Tensor3 out(n, n, d);
  Eigen::RowVectorXd acc(d), proj(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      acc = ang.vec(i, j, 0) * W_A;
      for (Eigen::Index x = 1; x < ka; ++x) {
        proj = ang.vec(i, j, x) * W_A;
        acc = acc.cwiseMax(proj);
      }
      out.vec(i, j) = dist.vec(i, j) * W_D + acc;
    }
  }
  return out;
}

}  // namespace fflogo
