#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fflogo/core/transform.hpp"

namespace fflogo {

/**
 * @brief Rotation error in degrees: the SO(3) geodesic distance
 * (180/pi) * arccos((Tr(R_hat R^T) - 1) / 2), with the arccos argument
 * clamped to [-1, 1] against numeric drift at 0 and 180 degrees.
 */
inline double rotation_error_deg(const Eigen::Matrix3d& R_hat, const Eigen::Matrix3d& R) {
  const RigidTransform a{R_hat, Eigen::Vector3d::Zero()};
  const RigidTransform b{R, Eigen::Vector3d::Zero()};
  if (!a.is_valid(1e-6) || !b.is_valid(1e-6))
    throw std::invalid_argument("rotation_error: input is not a rotation");
  const double cos_angle = std::clamp(((R_hat * R.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(cos_angle) * 180.0 / M_PI;
}

/// Translation error: Euclidean distance in meters.
inline double translation_error(const Eigen::Vector3d& t_hat, const Eigen::Vector3d& t) {
  if (!t_hat.allFinite() || !t.allFinite())
    throw std::invalid_argument("translation_error: non-finite input");
  return (t_hat - t).norm();
}

struct PairEvaluation {
  std::string pair_id;
  double re_deg = 0.0;
  double te_m = 0.0;
  bool recalled = false;
};

/// Scores an estimate against ground truth; recall uses strict inequalities.
inline PairEvaluation evaluate_pair(const std::string& pair_id, const RigidTransform& estimate,
                                    const RigidTransform& ground_truth,
                                    double re_threshold_deg = 15.0, double te_threshold_m = 0.3) {
  PairEvaluation e;
  e.pair_id = pair_id;
  e.re_deg = rotation_error_deg(estimate.rotation, ground_truth.rotation);
  e.te_m = translation_error(estimate.translation, ground_truth.translation);
  e.recalled = e.re_deg < re_threshold_deg && e.te_m < te_threshold_m;
  return e;
}

/// Fraction of evaluations with RE and TE strictly under the thresholds.
inline double recall(const std::vector<PairEvaluation>& evals, double re_threshold_deg = 15.0,
                     double te_threshold_m = 0.3) {
  if (evals.empty()) throw std::invalid_argument("recall: empty evaluation set");
  std::size_t hits = 0;
  for (const auto& e : evals)
    if (e.re_deg < re_threshold_deg && e.te_m < te_threshold_m) ++hits;
  return static_cast<double>(hits) / static_cast<double>(evals.size());
}

}  // namespace fflogo
