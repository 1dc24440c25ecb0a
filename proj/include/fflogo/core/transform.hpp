#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace fflogo {

/**
 * @brief Rigid motion in 3D: rotation in SO(3) plus a translation in meters.
 *
 * A transform is considered valid when R^T R = I and det(R) = +1, both
 * within 1e-9. Composition re-orthonormalizes automatically when numeric
 * drift exceeds that bound, so arbitrarily long chains stay valid.
 */
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  RigidTransform() = default;
  RigidTransform(const Eigen::Matrix3d& R, const Eigen::Vector3d& t)
      : rotation(R), translation(t) {}

  static RigidTransform identity() { return {}; }

  /// Builds from a rotation of `angle_rad` about `axis` (normalized here).
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle_rad,
                                        const Eigen::Vector3d& t = Eigen::Vector3d::Zero()) {
    const double n = axis.norm();
    if (n < 1e-15) throw std::invalid_argument("from_axis_angle: zero axis");
    Eigen::AngleAxisd aa(angle_rad, axis / n);
    return {aa.toRotationMatrix(), t};
  }

  static RigidTransform from_matrix(const Eigen::Matrix4d& m) {
    RigidTransform T{m.block<3, 3>(0, 0), m.block<3, 1>(0, 3)};
    if (!T.is_valid(1e-6)) throw std::invalid_argument("from_matrix: not a rigid transform");
    return T;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = rotation;
    m.block<3, 1>(0, 3) = translation;
    return m;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  /// Max deviation of R^T R from identity plus the determinant defect.
  double drift() const {
    const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                             .cwiseAbs()
                             .maxCoeff();
    return std::max(ortho, std::abs(rotation.determinant() - 1.0));
  }

  bool is_valid(double tol = 1e-9) const {
    return rotation.allFinite() && translation.allFinite() && drift() <= tol;
  }

  /// Nearest rotation by polar decomposition (det-corrected SVD).
  RigidTransform orthonormalized() const {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
    if (R.determinant() < 0.0) {
      Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
      flip(2, 2) = -1.0;
      R = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return {R, translation};
  }
};

/// compose(T1, T2) applies T2 first, then T1.
inline RigidTransform compose(const RigidTransform& t1, const RigidTransform& t2) {
  RigidTransform out{t1.rotation * t2.rotation, t1.rotation * t2.translation + t1.translation};
  if (out.drift() > 1e-9) out = out.orthonormalized();
  return out;
}

inline RigidTransform invert(const RigidTransform& t) {
  return {t.rotation.transpose(), -(t.rotation.transpose() * t.translation)};
}

}  // namespace fflogo
