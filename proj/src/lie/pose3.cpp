#include "dfg/lie/pose3.hpp"

#include <Eigen/LU>
#include <cmath>

namespace dfg::lie {

namespace {
constexpr double kSmallAngle = 1e-4;
constexpr double kOrthonormalTol = 1e-12;

bool is_rotation(const Matrix3& R) {
  return (R.transpose() * R - Matrix3::Identity()).cwiseAbs().maxCoeff() <
             kOrthonormalTol &&
         std::abs(R.determinant() - 1.0) < kOrthonormalTol;
}

// Coupling block of the SE(3) left Jacobian for xi = [rho; phi].
Matrix3 left_jacobian_q(const Vector3& rho, const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 P = skew(phi);
  const Matrix3 Rh = skew(rho);
  double c1, c2, c3;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    c1 = 1.0 / 6.0 - t2 / 120.0;
    c2 = 1.0 / 24.0 - t2 / 720.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double t2 = theta * theta;
    const double t4 = t2 * t2;
    c1 = (theta - s) / (t2 * theta);
    c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t4);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t4 * theta);
  }
  const Matrix3 PR = P * Rh;
  const Matrix3 RP = Rh * P;
  const Matrix3 PRP = PR * P;
  return 0.5 * Rh + c1 * (PR + RP + PRP) +
         c2 * (P * PR + RP * P - 3.0 * PRP) + c3 * (PRP * P + P * PRP);
}
}  // namespace

Pose3::Pose3(const Matrix3& rotation, const Vector3& translation)
    : rotation_(is_rotation(rotation) ? rotation : project_to_rotation(rotation)),
      translation_(translation) {}

Pose3 Pose3::from_matrix(const Matrix4& T) {
  return Pose3(T.topLeftCorner<3, 3>(), T.topRightCorner<3, 1>());
}

Pose3 Pose3::planar(double x, double y, double yaw, double z) {
  Matrix3 R = Matrix3::Identity();
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  R(0, 0) = c;
  R(0, 1) = -s;
  R(1, 0) = s;
  R(1, 1) = c;
  return Pose3(R, Vector3(x, y, z), Unchecked{});
}

Matrix4 Pose3::matrix() const {
  Matrix4 T = Matrix4::Identity();
  T.topLeftCorner<3, 3>() = rotation_;
  T.topRightCorner<3, 1>() = translation_;
  return T;
}

Pose3 Pose3::compose(const Pose3& other) const {
  return Pose3(reorthonormalize(rotation_ * other.rotation_),
               rotation_ * other.translation_ + translation_, Unchecked{});
}

Pose3 Pose3::inverse() const {
  const Matrix3 Rt = rotation_.transpose();
  return Pose3(Rt, -Rt * translation_, Unchecked{});
}

Pose3 Pose3::between(const Pose3& other) const {
  const Matrix3 Rt = rotation_.transpose();
  return Pose3(reorthonormalize(Rt * other.rotation_),
               Rt * (other.translation_ - translation_), Unchecked{});
}

Matrix6 Pose3::adjoint() const {
  Matrix6 A = Matrix6::Zero();
  A.topLeftCorner<3, 3>() = rotation_;
  A.topRightCorner<3, 3>() = skew(translation_) * rotation_;
  A.bottomRightCorner<3, 3>() = rotation_;
  return A;
}

Pose3 Pose3::retract(const Tangent6& delta) const {
  return compose(se3_exp(delta));
}

Tangent6 Pose3::local(const Pose3& other) const {
  return se3_log(between(other));
}

bool Pose3::is_approx(const Pose3& other, double tol) const {
  return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
         (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol;
}

Pose3 se3_exp(const Tangent6& xi) {
  const Vector3 rho = xi.head<3>();
  const Vector3 phi = xi.tail<3>();
  return Pose3(so3_exp(phi), so3_left_jacobian(phi) * rho, Pose3::Unchecked{});
}

Tangent6 se3_log(const Pose3& pose) {
  const Vector3 phi = so3_log(pose.rotation());
  Tangent6 xi;
  xi.head<3>() = so3_left_jacobian_inverse(phi) * pose.translation();
  xi.tail<3>() = phi;
  return xi;
}

Matrix6 se3_left_jacobian(const Tangent6& xi) {
  const Vector3 rho = xi.head<3>();
  const Vector3 phi = xi.tail<3>();
  const Matrix3 J = so3_left_jacobian(phi);
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = J;
  out.bottomRightCorner<3, 3>() = J;
  out.topRightCorner<3, 3>() = left_jacobian_q(rho, phi);
  return out;
}

Matrix6 se3_right_jacobian(const Tangent6& xi) {
  return se3_left_jacobian(-xi);
}

Matrix6 se3_right_jacobian_inverse(const Tangent6& xi) {
  const Vector3 rho = -xi.head<3>();
  const Vector3 phi = -xi.tail<3>();
  const Matrix3 Jinv = so3_left_jacobian_inverse(phi);
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = Jinv;
  out.bottomRightCorner<3, 3>() = Jinv;
  out.topRightCorner<3, 3>() = -Jinv * left_jacobian_q(rho, phi) * Jinv;
  return out;
}

}  // namespace dfg::lie
