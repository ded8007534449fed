#pragma once

#include <Eigen/Core>

#include "dfg/lie/pose3.hpp"

namespace dfg::lie {

/// Minimal coordinates of se(2), ordered [vx (m), vy (m), omega (rad)].
using Tangent3 = Eigen::Vector3d;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Planar rigid transform (x, y, theta) with theta kept in (-pi, pi].
class Pose2 {
 public:
  Pose2() = default;
  Pose2(double x, double y, double theta);

  static Pose2 identity() { return {}; }

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }
  Vector2 translation() const { return {x_, y_}; }
  Matrix2 rotation() const;
  Eigen::Matrix3d matrix() const;

  Pose2 compose(const Pose2& other) const;
  Pose2 inverse() const;
  Pose2 between(const Pose2& other) const;
  Pose2 operator*(const Pose2& other) const { return compose(other); }
  Vector2 transform_from(const Vector2& p) const {
    return rotation() * p + translation();
  }

  /// T exp(v) T^-1 == exp(Ad(T) v)
  Eigen::Matrix3d adjoint() const;

  Pose2 retract(const Tangent3& delta) const;
  Tangent3 local(const Pose2& other) const;

  bool is_approx(const Pose2& other, double tol = 1e-9) const;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double theta_ = 0.0;
};

Pose2 se2_exp(const Tangent3& xi);
/// Throws std::domain_error when |theta| reaches pi.
Tangent3 se2_log(const Pose2& pose);

Eigen::Matrix3d se2_right_jacobian(const Tangent3& xi);
Eigen::Matrix3d se2_right_jacobian_inverse(const Tangent3& xi);

/// Default tolerance on the out-of-plane components accepted by
/// project_se2.
inline constexpr double kPlanarTolerance = 1e-6;

/// (x, y, yaw) of a Pose3 that lies in the z = 0 plane with a pure yaw
/// rotation. Throws std::invalid_argument beyond `tolerance`.
Pose2 project_se2(const Pose3& pose, double tolerance = kPlanarTolerance);

/// (x, y, yaw) of any Pose3, ignoring out-of-plane components.
Pose2 planar_part(const Pose3& pose);

/// d planar_part(pose * exp(d)) / d d, expressed as a right perturbation
/// of the resulting Pose2.
Eigen::Matrix<double, 3, 6> planar_part_jacobian(const Pose3& pose);

Pose3 embed_se3(const Pose2& pose);

}  // namespace dfg::lie
