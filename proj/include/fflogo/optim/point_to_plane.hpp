#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fflogo/core/kdtree.hpp"
#include "fflogo/core/point_cloud.hpp"
#include "fflogo/core/transform.hpp"

namespace fflogo {

/// A source point paired with a target tangent plane (anchor + unit normal).
struct PlaneCorrespondence {
  int source_index = 0;
  int target_index = 0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

/**
 * @brief Picks the target plane for a (already transformed) query point.
 *
 * Among the `candidates` nearest target points inside `max_distance`, the
 * one minimizing the out-of-plane offset |(q - b) . n| wins; its precomputed
 * normal defines the plane. Candidates with invalid normals are skipped;
 * nullopt when none qualify.
 */
inline std::optional<PlaneCorrespondence> find_plane_correspondence(
    const Eigen::Vector3d& query, const PointCloud& target, const KdTree& target_index,
    int candidates = 5, double max_distance = std::numeric_limits<double>::infinity()) {
  if (!target.has_normals())
    throw std::invalid_argument("find_plane_correspondence: target lacks normals");

  std::vector<double> sq_dists;
  const auto nbrs = target_index.knn(query, candidates, &sq_dists);

  int best = -1;
  double best_offset = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < nbrs.size(); ++c) {
    if (sq_dists[c] > max_distance * max_distance) break;  // sorted by distance
    const int j = nbrs[c];
    if (!target.normal_valid[j]) continue;
    const double offset = std::abs((query - target.points[j]).dot(target.normals[j]));
    if (offset < best_offset) {
      best_offset = offset;
      best = j;
    }
  }
  if (best < 0) return std::nullopt;
  return PlaneCorrespondence{-1, best, target.normals[best]};
}

/// Signed plane offsets r_i = (T(a_i) - b_i) . n_i for the given pairing.
inline std::vector<double> point_to_plane_residuals(
    const PointCloud& patch, const PointCloud& target,
    const std::vector<PlaneCorrespondence>& correspondences, const RigidTransform& T) {
  std::vector<double> r;
  r.reserve(correspondences.size());
  for (const auto& c : correspondences)
    r.push_back(
        (T.apply(patch.points[c.source_index]) - target.points[c.target_index]).dot(c.normal));
  return r;
}

/// Derivative of one residual with respect to a left-applied twist
/// [rotation; translation] at the current transform. `moved` is T(a_i).
inline Eigen::Matrix<double, 1, 6> point_to_plane_jacobian_row(const Eigen::Vector3d& moved,
                                                               const Eigen::Vector3d& normal) {
  Eigen::Matrix<double, 1, 6> row;
  row.head<3>() = moved.cross(normal).transpose();
  row.tail<3>() = normal.transpose();
  return row;
}

struct LocalSolveOptions {
  int max_iterations = 50;
  double twist_tolerance = 1e-6;
  double distance_gate = 0.15;  // meters; pipeline sets 3 x voxel_size
  int plane_candidates = 5;
  int min_correspondences = 6;
};

/**
 * @brief Outcome of one patch's point-to-plane solve.
 *
 * `step_ssr` records (before, after) sums of squared residuals of every
 * accepted Gauss-Newton step, evaluated on that step's correspondence set;
 * the after value never exceeds the before value (step halving enforces
 * it). `excluded` marks results the fusion stage must ignore.
 */
struct LocalSolveResult {
  int patch_id = -1;
  RigidTransform transform;
  double rms = 0.0;
  int iterations = 0;
  bool converged = false;
  bool excluded = false;
  std::string exclude_reason;
  std::vector<std::pair<double, double>> step_ssr;
};

/**
 * @brief Iterative point-to-plane alignment of a patch against a filtered
 * target cloud.
 *
 * Each round re-pairs every patch point (under the current transform) with
 * its best nearby target plane, drops pairs beyond the distance gate,
 * linearizes the residuals in a 6-DOF twist and solves the normal
 * equations. Steps are halved until the squared-residual sum does not
 * increase. Terminates when the accepted twist norm falls under
 * `twist_tolerance` or after `max_iterations`. Flat-degenerate patches
 * (rank-deficient system) and starved ones (too few gated pairs) come back
 * `excluded`.
 */
inline LocalSolveResult local_patch_optimize(const PointCloud& patch, const PointCloud& target,
                                             const KdTree& target_index,
                                             const RigidTransform& T_init,
                                             const LocalSolveOptions& options = {},
                                             int patch_id = -1) {
  LocalSolveResult result;
  result.patch_id = patch_id;
  result.transform = T_init;

  if (!target.has_normals())
    throw std::invalid_argument("local_patch_optimize: target lacks normals");

  const int n_patch = static_cast<int>(patch.size());
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // Re-associate under the current transform.
    std::vector<PlaneCorrespondence> corr;
    corr.reserve(n_patch);
    for (int i = 0; i < n_patch; ++i) {
      const Eigen::Vector3d moved = result.transform.apply(patch.points[i]);
      auto c = find_plane_correspondence(moved, target, target_index, options.plane_candidates,
                                         options.distance_gate);
      if (!c) continue;
      c->source_index = i;
      corr.push_back(*c);
    }
    if (static_cast<int>(corr.size()) < options.min_correspondences) {
      result.excluded = true;
      result.exclude_reason = "fewer than " + std::to_string(options.min_correspondences) +
                              " gated correspondences";
      return result;
    }

    Eigen::Matrix<double, 6, 6> JtJ = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> Jtr = Eigen::Matrix<double, 6, 1>::Zero();
    double ssr = 0.0;
    for (const auto& c : corr) {
      const Eigen::Vector3d moved = result.transform.apply(patch.points[c.source_index]);
      const double r = (moved - target.points[c.target_index]).dot(c.normal);
      const auto row = point_to_plane_jacobian_row(moved, c.normal);
      JtJ += row.transpose() * row;
      Jtr += row.transpose() * r;
      ssr += r * r;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(JtJ);
    if (eig.eigenvalues()[0] <= 1e-10 * std::max(eig.eigenvalues()[5], 1.0)) {
      result.excluded = true;
      result.exclude_reason = "rank-deficient system (degenerate patch geometry)";
      return result;
    }
    const Eigen::Matrix<double, 6, 1> twist = -JtJ.ldlt().solve(Jtr);

    // Already at a fixed point of this pairing.
    if (twist.norm() < options.twist_tolerance) {
      result.iterations = iter + 1;
      result.rms = std::sqrt(ssr / static_cast<double>(corr.size()));
      result.converged = true;
      return result;
    }

    // Step halving: accept the first scale that does not increase the
    // squared-residual sum on this correspondence set.
    auto apply_twist = [&](double scale) {
      const Eigen::Vector3d omega = scale * twist.head<3>();
      const Eigen::Vector3d delta = scale * twist.tail<3>();
      const double angle = omega.norm();
      const RigidTransform step =
          angle < 1e-15 ? RigidTransform{Eigen::Matrix3d::Identity(), delta}
                        : RigidTransform{Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix(),
                                         delta};
      return compose(step, result.transform);
    };
    auto ssr_at = [&](const RigidTransform& T) {
      double s = 0.0;
      for (const auto& c : corr) {
        const double r =
            (T.apply(patch.points[c.source_index]) - target.points[c.target_index]).dot(c.normal);
        s += r * r;
      }
      return s;
    };

    double scale = 1.0;
    RigidTransform trial = apply_twist(scale);
    double trial_ssr = ssr_at(trial);
    bool accepted = trial_ssr <= ssr;
    for (int h = 0; !accepted && h < 12; ++h) {
      scale *= 0.5;
      trial = apply_twist(scale);
      trial_ssr = ssr_at(trial);
      accepted = trial_ssr <= ssr;
    }
    if (!accepted) {
      // Stalled: no step improves on this pairing.
      result.iterations = iter + 1;
      result.rms = std::sqrt(ssr / static_cast<double>(corr.size()));
      result.converged = false;
      result.excluded = true;
      result.exclude_reason = "line search stalled";
      return result;
    }

    result.transform = trial;
    result.iterations = iter + 1;
    result.rms = std::sqrt(trial_ssr / static_cast<double>(corr.size()));
    result.step_ssr.emplace_back(ssr, trial_ssr);

    if ((scale * twist).norm() < options.twist_tolerance) {
      result.converged = true;
      return result;
    }
  }
  // Ran out of iterations without meeting the twist tolerance.
  result.converged = false;
  result.excluded = true;
  result.exclude_reason = "iteration limit reached";
  return result;
}

}  // namespace fflogo
