#pragma once

#include <Eigen/Core>

#include "dfg/lie/so3.hpp"

namespace dfg::lie {

/// Minimal coordinates of se(3), ordered [translation (m); rotation (rad)].
using Tangent6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix4 = Eigen::Matrix4d;

/// Rigid transform in SE(3), stored as rotation matrix + translation.
///
/// Used for robot poses X_k, object poses L_k, object motions H and object
/// centre-of-mass poses C. Composition re-orthonormalizes the product so
/// long chains do not drift off the manifold.
class Pose3 {
 public:
  Pose3() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}

  /// `rotation` is projected onto SO(3) if it is not exactly orthonormal.
  Pose3(const Matrix3& rotation, const Vector3& translation);

  static Pose3 identity() { return {}; }
  static Pose3 from_matrix(const Matrix4& T);
  /// Planar pose: rotation about +z by `yaw`, translation (x, y, z).
  static Pose3 planar(double x, double y, double yaw, double z = 0.0);

  const Matrix3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Matrix4 matrix() const;

  Pose3 compose(const Pose3& other) const;
  Pose3 inverse() const;
  /// this^-1 * other
  Pose3 between(const Pose3& other) const;

  Vector3 transform_from(const Vector3& p) const {
    return rotation_ * p + translation_;
  }
  Vector3 transform_to(const Vector3& p) const {
    return rotation_.transpose() * (p - translation_);
  }

  Pose3 operator*(const Pose3& other) const { return compose(other); }
  Vector3 operator*(const Vector3& p) const { return transform_from(p); }

  /// Adjoint map acting on [translation; rotation] tangent vectors:
  /// T exp(v) T^-1 == exp(Ad(T) v).
  Matrix6 adjoint() const;

  /// Right retraction: this * exp(delta).
  Pose3 retract(const Tangent6& delta) const;
  /// log(this^-1 * other)
  Tangent6 local(const Pose3& other) const;

  bool is_approx(const Pose3& other, double tol = 1e-9) const;

 private:
  struct Unchecked {};
  Pose3(const Matrix3& rotation, const Vector3& translation, Unchecked)
      : rotation_(rotation), translation_(translation) {}

  Matrix3 rotation_;
  Vector3 translation_;

  friend Pose3 se3_exp(const Tangent6& xi);
};

Pose3 se3_exp(const Tangent6& xi);
/// Throws std::domain_error when the rotation angle reaches pi.
Tangent6 se3_log(const Pose3& pose);

/// Jacobians of the exponential map. Right: exp(xi + d) ~= exp(xi) exp(Jr d).
Matrix6 se3_left_jacobian(const Tangent6& xi);
Matrix6 se3_right_jacobian(const Tangent6& xi);
Matrix6 se3_right_jacobian_inverse(const Tangent6& xi);

}  // namespace dfg::lie
