#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fflogo/core/point_cloud.hpp"
#include "fflogo/filter/feature_extractor.hpp"

namespace fflogo {

/// Index pair between two feature sets (or clouds) with its similarity.
struct Correspondence {
  int i = 0;
  int j = 0;
  double weight = 0.0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;

  bool empty() const { return pairs.empty(); }
  std::size_t size() const { return pairs.size(); }
};

/**
 * @brief Gaussian feature similarity S(i,j) = exp(-|h_i - h_j|^2).
 *
 * Rows are renormalized to exact unit length first, so every entry lands in
 * (0, 1] with equality only for identical features; the squared distance of
 * two unit vectors never exceeds 4, bounding entries below by e^-4.
 */
inline Eigen::MatrixXd gaussian_correlation(const FeatureSet& source, const FeatureSet& target) {
  if (source.count() == 0 || target.count() == 0)
    throw std::invalid_argument("gaussian_correlation: empty feature set");
  if (source.features.cols() != target.features.cols())
    throw std::invalid_argument("gaussian_correlation: feature dimensions differ");

  Eigen::MatrixXd a = source.features;
  Eigen::MatrixXd b = target.features;
  a.rowwise().normalize();
  b.rowwise().normalize();

  Eigen::MatrixXd s(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    s.row(i) = (-(b.rowwise() - a.row(i)).rowwise().squaredNorm()).array().exp().transpose();
  return s;
}

/**
 * @brief Mutual top-k selection over a similarity matrix.
 *
 * Pair (i, j) survives iff j ranks in the top k of row i and i ranks in the
 * top k of column j; rank ties resolve to the lower index. An empty result
 * is a legitimate outcome the caller can react to (e.g. retry with larger k).
 */
inline CorrespondenceSet mutual_topk(const Eigen::MatrixXd& S, int k) {
  if (k < 1) throw std::invalid_argument("mutual_topk: k must be >= 1");
  const Eigen::Index rows = S.rows(), cols = S.cols();

  auto top_of = [&](Eigen::Index fixed, bool along_row) {
    const Eigen::Index extent = along_row ? cols : rows;
    std::vector<int> order(extent);
    std::iota(order.begin(), order.end(), 0);
    const auto take = std::min<Eigen::Index>(k, extent);
    std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](int a, int b) {
      const double va = along_row ? S(fixed, a) : S(a, fixed);
      const double vb = along_row ? S(fixed, b) : S(b, fixed);
      return va != vb ? va > vb : a < b;
    });
    order.resize(take);
    return order;
  };

  std::vector<std::vector<int>> col_top(cols);
  for (Eigen::Index j = 0; j < cols; ++j) col_top[j] = top_of(j, false);

  CorrespondenceSet out;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int j : top_of(i, true)) {
      const auto& candidates = col_top[j];
      if (std::find(candidates.begin(), candidates.end(), static_cast<int>(i)) !=
          candidates.end())
        out.pairs.push_back({static_cast<int>(i), j, S(i, j)});
    }
  }
  return out;
}

/// Correspondences remapped to cloud indices, plus the participating points.
struct FilterResult {
  CorrespondenceSet correspondences;  // indices into the original clouds
  std::vector<int> kept_source;       // sorted unique source indices
  std::vector<int> kept_target;       // sorted unique target indices
  int k_used = 0;
};

/**
 * @brief Full correspondence filtering step: mutual top-k on S, remapped
 * through the feature sets' index maps. The kept index lists define the
 * filtered point sets downstream stages consume.
 */
inline FilterResult filter_correspondences(const Eigen::MatrixXd& S, const FeatureSet& source,
                                           const FeatureSet& target, int k) {
  if (S.rows() != source.count() || S.cols() != target.count())
    throw std::invalid_argument("filter_correspondences: matrix/feature shape mismatch");
  FilterResult out;
  out.k_used = k;
  for (const auto& pair : mutual_topk(S, k).pairs)
    out.correspondences.pairs.push_back(
        {source.indices[pair.i], target.indices[pair.j], pair.weight});

  auto collect = [](const std::vector<Correspondence>& pairs, bool source_side) {
    std::vector<int> idx;
    idx.reserve(pairs.size());
    for (const auto& p : pairs) idx.push_back(source_side ? p.i : p.j);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
  };
  out.kept_source = collect(out.correspondences.pairs, true);
  out.kept_target = collect(out.correspondences.pairs, false);
  return out;
}

/// Writes "i,j,weight" rows for offline inspection.
inline void save_correspondences_csv(const std::string& path, const CorrespondenceSet& corr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.precision(17);
  out << "i,j,weight\n";
  for (const auto& p : corr.pairs) out << p.i << "," << p.j << "," << p.weight << "\n";
}

}  // namespace fflogo
