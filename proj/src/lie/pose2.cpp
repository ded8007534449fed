#include "dfg/lie/pose2.hpp"

#include <Eigen/LU>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dfg::lie {

namespace {
constexpr double kSmallAngle = 1e-5;
constexpr double kPiMargin = 1e-9;

// Entries of V(w) = [[a, -b], [b, a]], the translation part of exp.
void v_coefficients(double w, double& a, double& b) {
  if (std::abs(w) < kSmallAngle) {
    a = 1.0 - w * w / 6.0;
    b = 0.5 * w - w * w * w / 24.0;
  } else {
    a = std::sin(w) / w;
    b = (1.0 - std::cos(w)) / w;
  }
}
}  // namespace

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Pose2::Pose2(double x, double y, double theta)
    : x_(x), y_(y), theta_(wrap_angle(theta)) {}

Matrix2 Pose2::rotation() const {
  const double c = std::cos(theta_);
  const double s = std::sin(theta_);
  Matrix2 R;
  R << c, -s, s, c;
  return R;
}

Eigen::Matrix3d Pose2::matrix() const {
  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  T.topLeftCorner<2, 2>() = rotation();
  T(0, 2) = x_;
  T(1, 2) = y_;
  return T;
}

Pose2 Pose2::compose(const Pose2& other) const {
  const Vector2 t = rotation() * other.translation() + translation();
  return {t.x(), t.y(), theta_ + other.theta_};
}

Pose2 Pose2::inverse() const {
  const Vector2 t = -rotation().transpose() * translation();
  return {t.x(), t.y(), -theta_};
}

Pose2 Pose2::between(const Pose2& other) const {
  const Vector2 t = rotation().transpose() * (other.translation() - translation());
  return {t.x(), t.y(), other.theta_ - theta_};
}

Eigen::Matrix3d Pose2::adjoint() const {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  A.topLeftCorner<2, 2>() = rotation();
  A(0, 2) = y_;
  A(1, 2) = -x_;
  return A;
}

Pose2 Pose2::retract(const Tangent3& delta) const { return compose(se2_exp(delta)); }

Tangent3 Pose2::local(const Pose2& other) const { return se2_log(between(other)); }

bool Pose2::is_approx(const Pose2& other, double tol) const {
  return std::abs(x_ - other.x_) <= tol && std::abs(y_ - other.y_) <= tol &&
         std::abs(wrap_angle(theta_ - other.theta_)) <= tol;
}

Pose2 se2_exp(const Tangent3& xi) {
  double a, b;
  v_coefficients(xi.z(), a, b);
  return {a * xi.x() - b * xi.y(), b * xi.x() + a * xi.y(), xi.z()};
}

Tangent3 se2_log(const Pose2& pose) {
  const double w = pose.theta();
  if (std::numbers::pi - std::abs(w) < kPiMargin) {
    throw std::domain_error("se2_log: rotation angle is pi");
  }
  double a, b;
  v_coefficients(w, a, b);
  const double det = a * a + b * b;
  return {(a * pose.x() + b * pose.y()) / det, (-b * pose.x() + a * pose.y()) / det, w};
}

Eigen::Matrix3d se2_right_jacobian(const Tangent3& xi) {
  const double r1 = xi.x();
  const double r2 = xi.y();
  const double w = xi.z();
  Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
  if (std::abs(w) < kSmallAngle) {
    J(0, 0) = 1.0 - w * w / 6.0;
    J(0, 1) = 0.5 * w;
    J(1, 0) = -0.5 * w;
    J(1, 1) = 1.0 - w * w / 6.0;
    J(0, 2) = -0.5 * r2 + r1 * w / 6.0 + r2 * w * w / 24.0;
    J(1, 2) = 0.5 * r1 + r2 * w / 6.0 - r1 * w * w / 24.0;
    return J;
  }
  const double s = std::sin(w);
  const double c = std::cos(w);
  J(0, 0) = s / w;
  J(0, 1) = (1.0 - c) / w;
  J(1, 0) = (c - 1.0) / w;
  J(1, 1) = s / w;
  J(0, 2) = (w * r1 - r2 + r2 * c - r1 * s) / (w * w);
  J(1, 2) = (r1 + w * r2 - r1 * c - r2 * s) / (w * w);
  return J;
}

Eigen::Matrix3d se2_right_jacobian_inverse(const Tangent3& xi) {
  return se2_right_jacobian(xi).inverse();
}

Pose2 planar_part(const Pose3& pose) {
  const auto& R = pose.rotation();
  const auto& t = pose.translation();
  return {t.x(), t.y(), std::atan2(R(1, 0), R(0, 0))};
}

Pose2 project_se2(const Pose3& pose, double tolerance) {
  const auto& R = pose.rotation();
  const double off_plane =
      std::max({std::abs(pose.translation().z()), std::abs(R(2, 0)), std::abs(R(2, 1)),
                std::abs(R(0, 2)), std::abs(R(1, 2)), std::abs(R(2, 2) - 1.0)});
  if (off_plane > tolerance) {
    throw std::invalid_argument("project_se2: pose is not planar");
  }
  return planar_part(pose);
}

Eigen::Matrix<double, 3, 6> planar_part_jacobian(const Pose3& pose) {
  const auto& R = pose.rotation();
  const double yaw = std::atan2(R(1, 0), R(0, 0));
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix<double, 3, 6> J = Eigen::Matrix<double, 3, 6>::Zero();
  // Translation moves by R * rho; expressed in the rotated planar frame.
  Eigen::Matrix<double, 2, 3> rows = R.topRows<2>();
  Eigen::Matrix2d Rt;
  Rt << c, s, -s, c;
  J.block<2, 3>(0, 0) = Rt * rows;
  // First column of R * skew(phi) is R.col(1) * phi_z - R.col(2) * phi_y.
  const double n = R(0, 0) * R(0, 0) + R(1, 0) * R(1, 0);
  J(2, 4) = (-R(0, 0) * R(1, 2) + R(1, 0) * R(0, 2)) / n;
  J(2, 5) = (R(0, 0) * R(1, 1) - R(1, 0) * R(0, 1)) / n;
  return J;
}

Pose3 embed_se3(const Pose2& pose) {
  return Pose3::planar(pose.x(), pose.y(), pose.theta());
}

}  // namespace dfg::lie
