#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>
#include <numbers>
#include <random>

#include "dfg/lie/pose2.hpp"
#include "dfg/lie/pose3.hpp"
#include "dfg/lie/so3.hpp"
#include "test_support.hpp"

using namespace dfg::lie;
using dfg::testkit::random_pose2;
using dfg::testkit::random_pose3;
using dfg::testkit::random_vector;

namespace {

// RK4 integration of the body-frame screw motion with constant twist.
Pose2 integrate_twist(double a, double b, double w, int steps) {
  double x = 0, y = 0, th = 0;
  const double h = 1.0 / steps;
  auto f = [&](double t) {
    return Eigen::Vector3d(a * std::cos(t) - b * std::sin(t), a * std::sin(t) + b * std::cos(t), w);
  };
  for (int i = 0; i < steps; ++i) {
    const Eigen::Vector3d k1 = f(th);
    const Eigen::Vector3d k2 = f(th + 0.5 * h * k1(2));
    const Eigen::Vector3d k3 = f(th + 0.5 * h * k2(2));
    const Eigen::Vector3d k4 = f(th + h * k3(2));
    const Eigen::Vector3d d = (k1 + 2 * k2 + 2 * k3 + k4) * h / 6.0;
    x += d(0);
    y += d(1);
    th += d(2);
  }
  return Pose2(x, y, th);
}

}  // namespace

TEST(Pose2Test, ExpIdentityAndPureTranslation) {
  EXPECT_TRUE(se2_exp(Tangent3::Zero()).matrix().isIdentity(0.0));
  const Pose2 p = se2_exp(Tangent3(1, 0, 0));
  EXPECT_DOUBLE_EQ(p.x(), 1.0);
  EXPECT_DOUBLE_EQ(p.y(), 0.0);
  EXPECT_DOUBLE_EQ(p.theta(), 0.0);
}

TEST(Pose2Test, ExpMatchesIntegratedScrewMotion) {
  const double w = std::numbers::pi / 2;
  const Pose2 closed = se2_exp(Tangent3(1, 0, w));
  const Pose2 integrated = integrate_twist(1, 0, w, 20000);
  EXPECT_NEAR(closed.x(), integrated.x(), 1e-12);
  EXPECT_NEAR(closed.y(), integrated.y(), 1e-12);
  EXPECT_NEAR(closed.theta(), integrated.theta(), 1e-12);

  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd v = random_vector(rng, 3, 2.0);
    const Pose2 c = se2_exp(v);
    const Pose2 n = integrate_twist(v(0), v(1), v(2), 20000);
    EXPECT_NEAR(c.x(), n.x(), 1e-10);
    EXPECT_NEAR(c.y(), n.y(), 1e-10);
    EXPECT_NEAR(std::remainder(c.theta() - n.theta(), 2 * std::numbers::pi), 0.0, 1e-10);
  }
}

TEST(Pose2Test, LogRoundTrip) {
  EXPECT_TRUE(se2_log(Pose2()).isZero(0.0));
  EXPECT_TRUE(se2_log(Pose2(1, 0, 0)).isApprox(Tangent3(1, 0, 0)));
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd v = random_vector(rng, 3, 3.0);
    EXPECT_LT((se2_log(se2_exp(v)) - v).norm(), 1e-9);
  }
}

TEST(Pose2Test, LogAtPiRejected) {
  EXPECT_THROW(se2_log(Pose2(0, 0, std::numbers::pi)), std::domain_error);
}

TEST(Pose2Test, ThetaWrapped) {
  const Pose2 p(0, 0, 3 * std::numbers::pi / 2);
  EXPECT_NEAR(p.theta(), -std::numbers::pi / 2, 1e-15);
  EXPECT_DOUBLE_EQ(wrap_angle(-std::numbers::pi), std::numbers::pi);
}

TEST(Pose2Test, GroupAxioms) {
  std::mt19937 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Pose2 a = random_pose2(rng), b = random_pose2(rng), c = random_pose2(rng);
    EXPECT_TRUE(((a * b) * c).matrix().isApprox((a * (b * c)).matrix(), 1e-12));
    EXPECT_TRUE((a * a.inverse()).matrix().isIdentity(1e-12));
    EXPECT_TRUE((a * a.between(b)).matrix().isApprox(b.matrix(), 1e-12));
    EXPECT_TRUE((a * Pose2()).matrix().isApprox(a.matrix(), 0.0));
  }
}

TEST(Pose3Test, ExpLogRoundTrip) {
  EXPECT_TRUE(se3_exp(Tangent6::Zero()).matrix().isIdentity(0.0));
  EXPECT_TRUE(se3_log(Pose3()).isZero(0.0));
  std::mt19937 rng(7);
  for (int i = 0; i < 500; ++i) {
    Tangent6 v;
    v.head<3>() = random_vector(rng, 3, 3.0);
    Eigen::Vector3d w = random_vector(rng, 3, 1.0);
    w *= std::uniform_real_distribution<double>(0.0, 3.0)(rng) / w.norm();
    v.tail<3>() = w;
    EXPECT_LT((se3_log(se3_exp(v)) - v).norm(), 1e-9) << v.transpose();
  }
}

TEST(Pose3Test, ExpMatchesMatrixExponentialSeries) {
  std::mt19937 rng(9);
  for (int i = 0; i < 20; ++i) {
    const Tangent6 v = random_vector(rng, 6, 1.0);
    Matrix4 X = Matrix4::Zero();
    X.topLeftCorner<3, 3>() = skew(v.tail<3>());
    X.topRightCorner<3, 1>() = v.head<3>();
    Matrix4 term = Matrix4::Identity(), sum = Matrix4::Identity();
    for (int n = 1; n < 40; ++n) {
      term = term * X / n;
      sum += term;
    }
    EXPECT_TRUE(se3_exp(v).matrix().isApprox(sum, 1e-12));
  }
}

TEST(Pose3Test, LogAtPiRejected) {
  Tangent6 v = Tangent6::Zero();
  v(5) = std::numbers::pi;
  EXPECT_THROW(se3_log(se3_exp(v)), std::domain_error);
}

TEST(Pose3Test, ComposeMatchesHomogeneousProduct) {
  std::mt19937 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Pose3 H = random_pose3(rng), L = random_pose3(rng);
    EXPECT_TRUE((H * L).matrix().isApprox(H.matrix() * L.matrix(), 1e-12));
    EXPECT_TRUE(H.inverse().matrix().isApprox(H.matrix().inverse(), 1e-12));
  }
}

TEST(Pose3Test, GroupAxioms) {
  std::mt19937 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Pose3 a = random_pose3(rng), b = random_pose3(rng), c = random_pose3(rng);
    EXPECT_TRUE(((a * b) * c).matrix().isApprox((a * (b * c)).matrix(), 1e-12));
    EXPECT_TRUE((a * a.inverse()).matrix().isIdentity(1e-12));
    EXPECT_TRUE((a * a.between(b)).is_approx(b, 1e-12));
    EXPECT_TRUE(a.between(a).matrix().isIdentity(1e-12));
  }
}

TEST(Pose3Test, ChainedCompositionStaysOrthonormal) {
  std::mt19937 rng(19);
  Pose3 p;
  const Pose3 step = random_pose3(rng, 0.1, 0.3);
  for (int i = 0; i < 10000; ++i) p = p * step;
  const Matrix3 R = p.rotation();
  EXPECT_LT((R.transpose() * R - Matrix3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-9);
}

TEST(Pose3Test, AdjointMovesTangentAcrossPose) {
  std::mt19937 rng(23);
  for (int i = 0; i < 50; ++i) {
    const Pose3 X = random_pose3(rng);
    const Tangent6 v = random_vector(rng, 6, 0.5);
    const Pose3 lhs = X * se3_exp(v);
    const Pose3 rhs = se3_exp(X.adjoint() * v) * X;
    EXPECT_TRUE(lhs.matrix().isApprox(rhs.matrix(), 1e-12));
  }
}

TEST(Pose3Test, RightJacobianInverse) {
  std::mt19937 rng(29);
  for (int i = 0; i < 50; ++i) {
    const Tangent6 v = random_vector(rng, 6, 1.0);
    EXPECT_TRUE((se3_right_jacobian(v) * se3_right_jacobian_inverse(v)).isIdentity(1e-10));
  }
  // Small-angle branch.
  Tangent6 small = Tangent6::Zero();
  small << 0.3, -0.2, 0.1, 1e-6, -2e-6, 5e-7;
  EXPECT_TRUE((se3_right_jacobian(small) * se3_right_jacobian_inverse(small)).isIdentity(1e-10));
}

TEST(Pose3Test, RightJacobianMatchesFiniteDifference) {
  std::mt19937 rng(31);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const Tangent6 v = random_vector(rng, 6, 1.0);
    Matrix6 num;
    for (int j = 0; j < 6; ++j) {
      Tangent6 d = Tangent6::Zero();
      d(j) = h;
      // exp(v + d) ~= exp(v) exp(Jr d)
      num.col(j) = (se3_log(se3_exp(v).inverse() * se3_exp(v + d)) -
                    se3_log(se3_exp(v).inverse() * se3_exp(v - d))) /
                   (2 * h);
    }
    EXPECT_LT((num - se3_right_jacobian(v)).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Pose2Test, RightJacobianMatchesFiniteDifference) {
  std::mt19937 rng(37);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const Tangent3 v = random_vector(rng, 3, 1.5);
    Eigen::Matrix3d num;
    for (int j = 0; j < 3; ++j) {
      Tangent3 d = Tangent3::Zero();
      d(j) = h;
      num.col(j) = (se2_log(se2_exp(v).inverse() * se2_exp(v + d)) -
                    se2_log(se2_exp(v).inverse() * se2_exp(v - d))) /
                   (2 * h);
    }
    EXPECT_LT((num - se2_right_jacobian(v)).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_TRUE((se2_right_jacobian(v) * se2_right_jacobian_inverse(v)).isIdentity(1e-10));
  }
}

TEST(ProjectionTest, PlanarPoses) {
  const Pose2 id = project_se2(Pose3());
  EXPECT_EQ(id.x(), 0.0);
  EXPECT_EQ(id.theta(), 0.0);

  const Pose2 p = project_se2(Pose3::planar(1, 2, std::numbers::pi / 4));
  EXPECT_NEAR(p.x(), 1, 1e-15);
  EXPECT_NEAR(p.y(), 2, 1e-15);
  EXPECT_NEAR(p.theta(), std::numbers::pi / 4, 1e-15);

  std::mt19937 rng(41);
  for (int i = 0; i < 100; ++i) {
    const Pose2 q = random_pose2(rng);
    const Pose3 e = embed_se3(q);
    EXPECT_TRUE(embed_se3(project_se2(e)).matrix().isApprox(e.matrix(), 1e-12));
    const Pose2 back = project_se2(e);
    EXPECT_NEAR(back.x(), q.x(), 1e-12);
    EXPECT_NEAR(back.y(), q.y(), 1e-12);
    EXPECT_NEAR(back.theta(), q.theta(), 1e-12);
  }
}

TEST(ProjectionTest, NonPlanarRejected) {
  Tangent6 v = Tangent6::Zero();
  v(3) = 0.1;  // roll
  EXPECT_THROW(project_se2(se3_exp(v)), std::invalid_argument);
  EXPECT_THROW(project_se2(Pose3::planar(0, 0, 0, 0.5)), std::invalid_argument);
  EXPECT_NO_THROW(planar_part(se3_exp(v)));
}

TEST(ProjectionTest, PlanarPartJacobian) {
  std::mt19937 rng(43);
  const double h = 1e-6;
  for (int i = 0; i < 30; ++i) {
    const Pose3 X = random_pose3(rng, 2.0, 0.2);
    const Pose2 base = planar_part(X);
    Eigen::Matrix<double, 3, 6> num;
    for (int j = 0; j < 6; ++j) {
      Tangent6 d = Tangent6::Zero();
      d(j) = h;
      num.col(j) = (base.local(planar_part(X.retract(d))) - base.local(planar_part(X.retract(-d)))) /
                   (2 * h);
    }
    EXPECT_LT((num - planar_part_jacobian(X)).cwiseAbs().maxCoeff(), 1e-6);
  }
}
