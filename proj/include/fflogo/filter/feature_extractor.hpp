#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fflogo/core/kdtree.hpp"
#include "fflogo/core/normals.hpp"
#include "fflogo/core/point_cloud.hpp"
#include "fflogo/detail/rng.hpp"
#include "fflogo/filter/embedding.hpp"
#include "fflogo/keyregion/fps.hpp"

namespace fflogo {

/**
 * @brief Per-point descriptors on the unit hypersphere.
 *
 * `indices[r]` maps feature row r back to its point in the source cloud;
 * points without a usable descriptor (e.g. degenerate normals) are absent.
 */
struct FeatureSet {
  Eigen::MatrixXd features;  // one unit-norm row per described point
  std::vector<int> indices;

  Eigen::Index count() const { return features.rows(); }

  void validate() const {
    if (features.rows() != static_cast<Eigen::Index>(indices.size()))
      throw std::invalid_argument("FeatureSet: row/index count mismatch");
    for (Eigen::Index r = 0; r < features.rows(); ++r)
      if (std::abs(features.row(r).norm() - 1.0) > 1e-6)
        throw std::invalid_argument("FeatureSet: row " + std::to_string(r) + " is not unit norm");
  }
};

/// Deterministic per-cloud descriptor backend.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureSet extract(const PointCloud& cloud) const = 0;
  virtual std::string name() const = 0;
};

/**
 * @brief Local angle-histogram descriptor ("classical-descriptor").
 *
 * A fast point feature histogram: for every point, Darboux-frame angle
 * statistics against its radius neighborhood (11 bins per angle, 33 dims),
 * then re-weighted by the neighbors' own histograms with inverse-distance
 * weights and normalized to unit length. Depends only on distances, normals
 * and relative directions, so descriptors are rigid-invariant and need no
 * training. Points with degenerate normals or empty neighborhoods are left
 * out of the feature set.
 */
class LocalHistogramExtractor final : public FeatureExtractor {
 public:
  struct Params {
    double radius = 0.25;      // neighborhood radius, meters
    int max_neighbors = 64;    // nearest-within-radius cap
    int normals_k = 20;        // used only when the cloud lacks normals
    int min_support = 10;      // minimum described points
  };

  LocalHistogramExtractor() = default;
  explicit LocalHistogramExtractor(const Params& params) : params_(params) {}

  std::string name() const override { return "classical-descriptor"; }

  FeatureSet extract(const PointCloud& cloud) const override {
    if (cloud.size() < static_cast<std::size_t>(params_.min_support))
      throw std::invalid_argument("classical-descriptor: cloud below minimum support (" +
                                  std::to_string(params_.min_support) + " points)");
    const PointCloud* src = &cloud;
    PointCloud with_normals;
    if (!cloud.has_normals()) {
      with_normals = estimate_normals(cloud, std::min<int>(params_.normals_k,
                                                           static_cast<int>(cloud.size()) - 1));
      src = &with_normals;
    }

    const int n = static_cast<int>(src->size());
    KdTree tree(*src);

    std::vector<std::vector<int>> hoods(n);
    std::vector<std::vector<double>> hood_dists(n);
    Eigen::MatrixXd spfh = Eigen::MatrixXd::Zero(n, kBins);
    std::vector<char> described(n, 0);

    for (int i = 0; i < n; ++i) {
      if (!src->normal_valid[i]) continue;
      auto nbrs = tree.radius(src->points[i], params_.radius);
      std::erase(nbrs, i);
      if (static_cast<int>(nbrs.size()) > params_.max_neighbors) {
        // Thin by striding the distance-sorted list instead of truncating,
        // so the histogram keeps the full radial extent regardless of the
        // cloud's density. Keeps descriptors comparable across modalities.
        std::vector<int> thinned;
        thinned.reserve(params_.max_neighbors);
        const double stride = static_cast<double>(nbrs.size()) / params_.max_neighbors;
        for (int s = 0; s < params_.max_neighbors; ++s)
          thinned.push_back(nbrs[static_cast<std::size_t>(s * stride)]);
        nbrs = std::move(thinned);
      }
      std::vector<int> used;
      std::vector<double> dists;
      for (int j : nbrs) {
        if (!src->normal_valid[j]) continue;
        const double d = (src->points[j] - src->points[i]).norm();
        if (d < 1e-12) continue;
        if (accumulate_pair(*src, i, j, spfh.row(i))) {
          used.push_back(j);
          dists.push_back(d);
        }
      }
      if (!used.empty()) {
        spfh.row(i) /= static_cast<double>(used.size());
        hoods[i] = std::move(used);
        hood_dists[i] = std::move(dists);
        described[i] = 1;
      }
    }

    FeatureSet out;
    std::vector<Eigen::RowVectorXd> rows;
    for (int i = 0; i < n; ++i) {
      if (!described[i]) continue;
      Eigen::RowVectorXd f = spfh.row(i);
      double weight_sum = 0.0;
      Eigen::RowVectorXd nbr_part = Eigen::RowVectorXd::Zero(kBins);
      for (std::size_t q = 0; q < hoods[i].size(); ++q) {
        const int j = hoods[i][q];
        if (!described[j]) continue;
        const double w = 1.0 / hood_dists[i][q];
        nbr_part += w * spfh.row(j);
        weight_sum += w;
      }
      if (weight_sum > 0.0) f += nbr_part / weight_sum;
      const double norm = f.norm();
      if (norm < 1e-12) continue;
      rows.push_back(f / norm);
      out.indices.push_back(i);
    }
    if (static_cast<int>(rows.size()) < params_.min_support)
      throw std::invalid_argument("classical-descriptor: fewer than " +
                                  std::to_string(params_.min_support) + " describable points");
    out.features.resize(static_cast<Eigen::Index>(rows.size()), kBins);
    for (std::size_t r = 0; r < rows.size(); ++r) out.features.row(r) = rows[r];
    return out;
  }

 private:
  static constexpr int kBinsPerAngle = 11;
  static constexpr int kBins = 3 * kBinsPerAngle;

  static bool accumulate_pair(const PointCloud& cloud, int i, int j,
                              Eigen::Block<Eigen::MatrixXd, 1> hist) {
    const Eigen::Vector3d d = (cloud.points[j] - cloud.points[i]).normalized();
    const Eigen::Vector3d u = cloud.normals[i];
    Eigen::Vector3d v = d.cross(u);
    const double vn = v.norm();
    if (vn < 1e-9) return false;  // direction parallel to the normal
    v /= vn;
    const Eigen::Vector3d w = u.cross(v);
    const Eigen::Vector3d& nj = cloud.normals[j];

    const double f1 = v.dot(nj);                    // [-1, 1]
    const double f2 = u.dot(d);                     // [-1, 1]
    const double f3 = std::atan2(w.dot(nj), u.dot(nj));  // [-pi, pi]

    auto bin = [](double value, double lo, double hi) {
      int b = static_cast<int>((value - lo) / (hi - lo) * kBinsPerAngle);
      return std::clamp(b, 0, kBinsPerAngle - 1);
    };
    hist[bin(f1, -1.0, 1.0)] += 1.0;
    hist[kBinsPerAngle + bin(f2, -1.0, 1.0)] += 1.0;
    hist[2 * kBinsPerAngle + bin(f3, -M_PI, M_PI)] += 1.0;
    return true;
  }

  Params params_;
};

/**
 * @brief Seeded attention stack ("seeded-attention").
 *
 * A two-block attention network over the sinusoidal structure embeddings,
 * with all projection weights drawn from a seeded generator — an untrained
 * stand-in with the same shape as a learned geometric attention backbone.
 * Embeddings are computed against an anchor subset (farthest-point sampled)
 * in row blocks, so memory stays linear in the cloud size. Deterministic for
 * a fixed (cloud, config, seed) and rigid-invariant by construction.
 */
class SeededAttentionExtractor final : public FeatureExtractor {
 public:
  struct Params {
    EmbeddingConfig embedding;
    int anchors = 128;
    int blocks = 2;
    std::uint64_t seed = 0;
  };

  SeededAttentionExtractor() { init_weights(); }
  explicit SeededAttentionExtractor(const Params& params) : params_(params) {
    params_.embedding.validate();
    if (params_.anchors < 1) throw std::invalid_argument("seeded-attention: anchors must be >= 1");
    if (params_.blocks < 1) throw std::invalid_argument("seeded-attention: blocks must be >= 1");
    init_weights();
  }

  std::string name() const override { return "seeded-attention"; }

  FeatureSet extract(const PointCloud& cloud) const override {
    const int min_support = std::max(4, params_.embedding.k_angular + 1);
    if (static_cast<int>(cloud.size()) < min_support)
      throw std::invalid_argument("seeded-attention: cloud below minimum support (" +
                                  std::to_string(min_support) + " points)");
    const int n = static_cast<int>(cloud.size());
    const int d = params_.embedding.dim;
    const int m = std::min(params_.anchors, n);

    const auto anchor_set = farthest_point_sample(cloud, m);
    const auto neighbor_sets = angular_neighbor_sets(cloud);

    // Initial features: squashed mean of each point's anchor embeddings.
    Eigen::MatrixXd H(n, d);
    for_each_row_block(n, [&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
        Eigen::RowVectorXd e(d);
        for (int a = 0; a < m; ++a) {
          anchor_embedding(cloud, neighbor_sets, i, anchor_set.indices[a], e);
          mean += e;
        }
        H.row(i) = ((mean / m) * W_in_).array().tanh();
      }
    });

    for (int b = 0; b < params_.blocks; ++b) {
      const auto& w = block_weights_[b];
      Eigen::MatrixXd anchor_feats(m, d);
      for (int a = 0; a < m; ++a) anchor_feats.row(a) = H.row(anchor_set.indices[a]);
      const Eigen::MatrixXd keys = anchor_feats * w.W_k;
      const Eigen::MatrixXd values = anchor_feats * w.W_v;

      Eigen::MatrixXd H_next(n, d);
      for_each_row_block(n, [&](int lo, int hi) {
        Eigen::RowVectorXd e(d), scores(m), msg(d);
        for (int i = lo; i < hi; ++i) {
          const Eigen::RowVectorXd query = H.row(i) * w.W_q;
          Eigen::MatrixXd e_rows(m, d);
          for (int a = 0; a < m; ++a) {
            anchor_embedding(cloud, neighbor_sets, i, anchor_set.indices[a], e);
            e_rows.row(a) = e;
            scores[a] = query.dot(keys.row(a)) / std::sqrt(double(d)) + e.dot(w.bias);
          }
          const double peak = scores.maxCoeff();
          Eigen::RowVectorXd attn = (scores.array() - peak).exp();
          attn /= attn.sum();
          msg = attn * (values + e_rows * w.W_e);
          Eigen::RowVectorXd h = H.row(i) + (msg * w.W_o).array().tanh().matrix();
          H_next.row(i) = h / std::max(h.norm(), 1e-12);
        }
      });
      H = std::move(H_next);
    }

    FeatureSet out;
    out.features = H;
    for (Eigen::Index r = 0; r < out.features.rows(); ++r)
      out.features.row(r) /= std::max(out.features.row(r).norm(), 1e-12);
    out.indices.resize(n);
    for (int i = 0; i < n; ++i) out.indices[i] = i;
    return out;
  }

 private:
  struct BlockWeights {
    Eigen::MatrixXd W_q, W_k, W_v, W_e, W_o;
    Eigen::RowVectorXd bias;
  };

  void init_weights() {
    Rng rng(derive_seed(params_.seed, 0x5eededa77ULL));
    const int d = params_.embedding.dim;
    auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
      Eigen::MatrixXd w(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.normal() / std::sqrt(double(d));
      return w;
    };
    W_in_ = draw(d, d);
    W_D_ = draw(d, d);
    W_A_ = draw(d, d);
    block_weights_.clear();
    for (int b = 0; b < params_.blocks; ++b)
      block_weights_.push_back(
          {draw(d, d), draw(d, d), draw(d, d), draw(d, d), draw(d, d), draw(1, d)});
  }

  std::vector<std::vector<int>> angular_neighbor_sets(const PointCloud& cloud) const {
    const int n = static_cast<int>(cloud.size());
    KdTree tree(cloud);
    std::vector<std::vector<int>> sets(n);
    for (int i = 0; i < n; ++i) {
      auto nbrs = tree.knn(cloud.points[i], params_.embedding.k_angular + 1);
      std::erase(nbrs, i);
      nbrs.resize(params_.embedding.k_angular);
      sets[i] = std::move(nbrs);
    }
    return sets;
  }

  // Structure embedding of the (point, anchor) pair: projected distance
  // channels plus the elementwise max over projected angular channels.
  void anchor_embedding(const PointCloud& cloud, const std::vector<std::vector<int>>& nbrs,
                        int i, int anchor, Eigen::RowVectorXd& out) const {
    const int d = params_.embedding.dim;
    Eigen::RowVectorXd chan(d);
    const double dist = (cloud.points[i] - cloud.points[anchor]).norm();
    detail::sinusoid_channels(dist / params_.embedding.sigma_d, d, chan.data());
    out = chan * W_D_;

    const Eigen::Vector3d to_j = cloud.points[anchor] - cloud.points[i];
    Eigen::RowVectorXd ang_max;
    for (int x = 0; x < params_.embedding.k_angular; ++x) {
      const Eigen::Vector3d to_x = cloud.points[nbrs[i][x]] - cloud.points[i];
      double alpha = 0.0;
      if (to_j.norm() >= 1e-15 && to_x.norm() >= 1e-15) alpha = detail::angle_between(to_x, to_j);
      detail::sinusoid_channels(alpha / params_.embedding.sigma_a, d, chan.data());
      Eigen::RowVectorXd proj = chan * W_A_;
      ang_max = (x == 0) ? proj : ang_max.cwiseMax(proj).eval();
    }
    out += ang_max;
  }

  template <typename Fn>
  static void for_each_row_block(int n, Fn&& fn) {
    constexpr int kBlock = 256;
    for (int lo = 0; lo < n; lo += kBlock) fn(lo, std::min(n, lo + kBlock));
  }

  Params params_;
  Eigen::MatrixXd W_in_, W_D_, W_A_;
  std::vector<BlockWeights> block_weights_;
};

/// Applies the extractor and enforces the unit-norm output contract.
inline FeatureSet extract_features(const PointCloud& cloud, const FeatureExtractor& extractor) {
  FeatureSet out = extractor.extract(cloud);
  out.validate();
  return out;
}

}  // namespace fflogo
