#include "dfg/lie/so3.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dfg::lie {

namespace {
constexpr double kSmallAngle = 1e-5;
constexpr double kPiMargin = 1e-9;

Vector3 vee(const Matrix3& A) {
  return {A(2, 1) - A(1, 2), A(0, 2) - A(2, 0), A(1, 0) - A(0, 1)};
}
}  // namespace

Matrix3 skew(const Vector3& v) {
  Matrix3 s;
  // clang-format off
  s <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Matrix3 so3_exp(const Vector3& omega) {
  const double theta = omega.norm();
  const Matrix3 W = skew(omega);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() + W + 0.5 * W * W;
  }
  return Matrix3::Identity() + std::sin(theta) / theta * W +
         (1.0 - std::cos(theta)) / (theta * theta) * W * W;
}

Vector3 so3_log(const Matrix3& R) {
  const Vector3 v = vee(R);
  const double s = 0.5 * v.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (std::numbers::pi - theta < kPiMargin) {
    throw std::domain_error("so3_log: rotation angle is pi");
  }
  if (theta < kSmallAngle) {
    return 0.5 * (1.0 + theta * theta / 6.0) * v;
  }
  if (s > 1e-6) {
    return theta / (2.0 * s) * v;
  }
  // Close to pi the antisymmetric part vanishes; take the axis from the
  // symmetric part instead.
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Matrix3 so3_left_jacobian(const Vector3& omega) {
  const double theta = omega.norm();
  const Matrix3 W = skew(omega);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() + 0.5 * W + W * W / 6.0;
  }
  const double t2 = theta * theta;
  return Matrix3::Identity() + (1.0 - std::cos(theta)) / t2 * W +
         (theta - std::sin(theta)) / (t2 * theta) * W * W;
}

Matrix3 so3_left_jacobian_inverse(const Vector3& omega) {
  const double theta = omega.norm();
  const Matrix3 W = skew(omega);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() - 0.5 * W + W * W / 12.0;
  }
  const double t2 = theta * theta;
  const double coeff =
      1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Matrix3::Identity() - 0.5 * W + coeff * W * W;
}

Matrix3 project_to_rotation(const Matrix3& M) {
  const Eigen::JacobiSVD<Matrix3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 U = svd.matrixU();
  const Matrix3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) {
    U.col(2) *= -1.0;
  }
  return U * V.transpose();
}

Matrix3 reorthonormalize(const Matrix3& R) {
  return 0.5 * R * (3.0 * Matrix3::Identity() - R.transpose() * R);
}

}  // namespace dfg::lie
