#pragma once

#include <Eigen/Core>

namespace dfg::lie {

using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;

/// skew(v) * u == v.cross(u)
Matrix3 skew(const Vector3& v);

/// Rodrigues' formula.
Matrix3 so3_exp(const Vector3& omega);

/// Rotation vector of R. Throws std::domain_error when the angle is within
/// 1e-9 of pi, where the axis is ambiguous.
Vector3 so3_log(const Matrix3& R);

/// Left Jacobian of SO(3): exp(omega + d) ~= exp(Jl d) exp(omega).
Matrix3 so3_left_jacobian(const Vector3& omega);
Matrix3 so3_left_jacobian_inverse(const Vector3& omega);

/// Nearest rotation in the Frobenius sense (polar factor), computed by SVD.
Matrix3 project_to_rotation(const Matrix3& M);

/// One Newton-Schulz step towards the polar factor; cheap, intended for
/// matrices that are already orthonormal up to rounding.
Matrix3 reorthonormalize(const Matrix3& R);

}  // namespace dfg::lie
