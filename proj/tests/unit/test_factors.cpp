#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <random>

#include "dfg/factors/factors.hpp"
#include "dfg/graph/graph.hpp"
#include "factor_samples.hpp"
#include "test_support.hpp"

using namespace dfg;
using namespace dfg::factors;
using graph::NoiseModel;
using graph::Value;
using lie::Pose2;
using lie::Pose3;
using testkit::evaluate;

namespace {

NoiseModel iso(int d, double s) { return NoiseModel::isotropic(d, s); }

}  // namespace

TEST(FactorJacobians, MatchFiniteDifferences) {
  std::mt19937 rng(2024);
  for (const auto& gen : testkit::factor_generators()) {
    double worst = 0.0;
    for (int n = 0; n < 25; ++n) {
      const auto check = testkit::check_jacobians(gen.make(rng));
      worst = std::max(worst, check.max_error);
      EXPECT_TRUE(check.masked_zero) << gen.name;
    }
    EXPECT_LT(worst, 1e-5) << gen.name;
  }
}

TEST(PriorFactorTest, Examples) {
  auto f = prior_factor(graph::velocity_key(0), Eigen::Vector2d(0.5, 0.1), iso(2, 1));
  EXPECT_TRUE(evaluate(*f, {Value(Eigen::Vector2d(0.5, 0.1))}).isZero(0.0));
  auto p = prior_factor(graph::robot_pose_key(0), Pose2(), iso(3, 1));
  EXPECT_TRUE(evaluate(*p, {Value(Pose2(0.1, 0, 0))}).isApprox(Eigen::Vector3d(0.1, 0, 0)));
  EXPECT_THROW(prior_factor(graph::robot_pose_key(0), Pose2(), iso(6, 1)), std::invalid_argument);
}

TEST(OdometryFactorTest, Examples) {
  std::mt19937 rng(1);
  const Pose3 a = testkit::random_pose3(rng), b = testkit::random_pose3(rng);
  auto f = odometry_factor(graph::robot_pose_key(0), graph::robot_pose_key(1), a.between(b),
                           iso(6, 1));
  EXPECT_LT(evaluate(*f, {Value(a), Value(b)}).norm(), 1e-12);
  auto id = odometry_factor(graph::robot_pose_key(0), graph::robot_pose_key(1), Pose3(),
                            iso(6, 1));
  EXPECT_LT(evaluate(*id, {Value(a), Value(a)}).norm(), 1e-12);
  // First-order response to a right perturbation of the second pose.
  lie::Tangent6 eps;
  eps << 1e-4, -2e-4, 3e-4, 1e-4, 2e-4, -1e-4;
  EXPECT_LT((evaluate(*f, {Value(a), Value(b.retract(eps))}) - eps).norm(), 1e-7);
}

TEST(PointMeasurementFactorTest, Examples) {
  auto f = point_measurement_factor(graph::robot_pose_key(0), graph::static_point_key(0, 0),
                                    Eigen::Vector3d::Zero(), iso(3, 0.1));
  const Pose3 X = Pose3::planar(1, 2, 0);
  EXPECT_TRUE(evaluate(*f, {Value(X), Value(Eigen::Vector3d(1, 2, 0))}).isZero(0.0));
  auto g = point_measurement_factor(graph::robot_pose_key(0), graph::static_point_key(0, 0),
                                    Eigen::Vector3d(1, 2, 0), iso(3, 0.1));
  EXPECT_TRUE(evaluate(*g, {Value(Pose3()), Value(Eigen::Vector3d(1, 2, 0))}).isZero(0.0));

  std::mt19937 rng(2);
  for (int i = 0; i < 50; ++i) {
    const Pose3 P = testkit::random_pose3(rng);
    const Eigen::Vector3d m = testkit::random_vector(rng, 3, 3);
    const Eigen::Vector4d h = P.matrix().inverse() * m.homogeneous();
    const Eigen::VectorXd r = evaluate(*f, {Value(P), Value(m)});
    EXPECT_LT((r - h.head<3>()).norm(), 1e-12);
  }
}

TEST(HybridMotionFactorTest, Examples) {
  const Eigen::Vector3d m(1, 2, 0.3);
  auto f = hybrid_motion_factor(graph::robot_pose_key(1), graph::motion_key(1, 1),
                                graph::dynamic_point_key(1, 0, 0), m, iso(3, 0.1));
  EXPECT_TRUE(evaluate(*f, {Value(Pose3()), Value(Pose3()), Value(m)}).isZero(0.0));

  auto shifted = hybrid_motion_factor(graph::robot_pose_key(1), graph::motion_key(1, 1),
                                      graph::dynamic_point_key(1, 0, 0),
                                      m + Eigen::Vector3d(1, 0, 0), iso(3, 0.1));
  const Pose3 H(Eigen::Matrix3d::Identity(), Eigen::Vector3d(1, 0, 0));
  EXPECT_LT(evaluate(*shifted, {Value(Pose3()), Value(H), Value(m)}).norm(), 1e-15);

  std::mt19937 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Pose3 X = testkit::random_pose3(rng), Hk = testkit::random_pose3(rng);
    const Eigen::Vector3d me = testkit::random_vector(rng, 3, 2);
    const Eigen::Vector4d z = X.matrix().inverse() * Hk.matrix() * me.homogeneous();
    auto g = hybrid_motion_factor(graph::robot_pose_key(1), graph::motion_key(1, 1),
                                  graph::dynamic_point_key(1, 0, 0), z.head<3>(), iso(3, 0.1));
    EXPECT_LT(evaluate(*g, {Value(X), Value(Hk), Value(me)}).norm(), 1e-12);
  }
}

TEST(ObjectSmoothingFactorTest, ConstantMotionIsZero) {
  std::mt19937 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Pose3 Ce = testkit::random_pose3(rng);
    const Pose3 step = testkit::random_pose3(rng, 0.3, 0.3);
    const Pose3 H0 = testkit::random_pose3(rng);
    // Constant CoM increment: C_{i+1} = C_i * step.
    const Pose3 C0 = H0 * Ce;
    const Pose3 C1 = C0 * step, C2 = C1 * step;
    auto f = object_smoothing_factor(graph::motion_key(1, 1), graph::motion_key(1, 2),
                                     graph::motion_key(1, 3), Ce, iso(6, 0.05));
    const Eigen::VectorXd r = evaluate(
        *f, {Value(H0), Value(C1 * Ce.inverse()), Value(C2 * Ce.inverse())});
    EXPECT_LT(r.norm(), 1e-12);
  }
  auto id = object_smoothing_factor(graph::motion_key(1, 1), graph::motion_key(1, 2),
                                    graph::motion_key(1, 3), Pose3::planar(1, 1, 0.2),
                                    iso(6, 0.05));
  EXPECT_LT(evaluate(*id, {Value(Pose3()), Value(Pose3()), Value(Pose3())}).norm(), 1e-15);
  // Pure translation chain t, 2t, 3t.
  const Pose3 t1(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.1, 0.05, 0));
  EXPECT_LT(evaluate(*id, {Value(t1), Value(t1 * t1), Value(t1 * t1 * t1)}).norm(), 1e-15);
}

TEST(ObjectSmoothingFactorTest, MatchesMatrixEvaluation) {
  std::mt19937 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Pose3 Ce = testkit::random_pose3(rng);
    const Pose3 H0 = testkit::random_pose3(rng), H1 = testkit::random_pose3(rng),
                H2 = testkit::random_pose3(rng, 1.0, 0.5);
    const Eigen::Matrix4d C0 = H0.matrix() * Ce.matrix(), C1 = H1.matrix() * Ce.matrix(),
                          C2 = H2.matrix() * Ce.matrix();
    const Eigen::Matrix4d E = (C0.inverse() * C1).inverse() * (C1.inverse() * C2);
    auto f = object_smoothing_factor(graph::motion_key(1, 1), graph::motion_key(1, 2),
                                     graph::motion_key(1, 3), Ce, iso(6, 0.05));
    const Eigen::VectorXd r = evaluate(*f, {Value(H0), Value(H1), Value(H2)});
    EXPECT_LT((lie::se3_exp(r).matrix() - E).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ComPoseTest, Examples) {
  const Pose3 Ce = Pose3::planar(1, 2, 0);
  EXPECT_TRUE(com_pose(Pose3(), Ce).is_approx(Ce, 0.0));
  const Pose3 H(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.5, -1, 0));
  EXPECT_TRUE(com_pose(H, Ce).translation().isApprox(Eigen::Vector3d(1.5, 1, 0)));
}

TEST(MotionModelFactorTest, Examples) {
  auto f = motion_model_factor(graph::robot_pose_key(0), graph::robot_pose_key(1),
                               graph::velocity_key(0), graph::velocity_key(1),
                               graph::acceleration_key(0), 0.1, iso(5, 1e-3));
  using V2 = Eigen::Vector2d;
  EXPECT_LT(evaluate(*f, {Value(Pose2()), Value(Pose2(0.1, 0, 0)), Value(V2(1, 0)),
                          Value(V2(1, 0)), Value(V2(0, 0))})
                .norm(),
            1e-15);

  const double pi = std::numbers::pi;
  const Pose2 x1(0.1 * std::cos(pi * 0.05), 0.1 * std::sin(pi * 0.05), 0.1 * pi);
  const Eigen::VectorXd r = evaluate(
      *f, {Value(Pose2()), Value(x1), Value(V2(1, pi)), Value(V2(1, pi)), Value(V2(0, 0))});
  EXPECT_LT(r.head<3>().norm(), 1e-15);

  const Eigen::VectorXd rv = evaluate(
      *f, {Value(Pose2()), Value(Pose2(0.01, 0, 0)), Value(V2(0, 0)), Value(V2(0.1, 0)),
           Value(V2(1, 0))});
  EXPECT_LT(rv.tail<2>().norm(), 1e-15);
}

TEST(MotionModelFactorTest, ZeroAlongIntegratedTrajectory) {
  std::mt19937 rng(6);
  auto f = motion_model_factor(graph::robot_pose_key(0), graph::robot_pose_key(1),
                               graph::velocity_key(0), graph::velocity_key(1),
                               graph::acceleration_key(0), 0.1, iso(5, 1e-3));
  Pose2 x(0.3, -0.2, 0.5);
  Eigen::Vector2d v(0.2, 0.1);
  for (int k = 0; k < 40; ++k) {
    const Eigen::Vector2d a = testkit::random_vector(rng, 2, 1.0);
    const Eigen::Vector2d vn = v + a * 0.1;
    const Pose2 xn = unicycle_step(x, vn, 0.1);
    EXPECT_LT(evaluate(*f, {Value(x), Value(xn), Value(v), Value(vn), Value(a)}).norm(), 1e-12);
    x = xn;
    v = vn;
  }
}

TEST(HingeFactorTest, LimitCostConstAccGoal) {
  auto lim = limit_factor(graph::velocity_key(1), Eigen::Vector2d(-1, -1),
                          Eigen::Vector2d(1, 1), iso(2, 1e-2));
  EXPECT_TRUE(evaluate(*lim, {Value(Eigen::Vector2d(0.5, -0.5))}).isZero(0.0));
  EXPECT_TRUE(evaluate(*lim, {Value(Eigen::Vector2d(1.5, -1.25))})
                  .isApprox(Eigen::Vector2d(0.5, 0.25)));
  EXPECT_THROW(limit_factor(graph::velocity_key(1), Eigen::Vector2d(1, 0),
                            Eigen::Vector2d(1, 1), iso(2, 1)),
               std::invalid_argument);
  // Continuous at the boundary.
  EXPECT_LT(evaluate(*lim, {Value(Eigen::Vector2d(1 + 1e-12, 0))}).norm(), 1e-11);

  std::mt19937 rng(9);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d v = testkit::random_vector(rng, 2, 3);
    const Eigen::VectorXd r = evaluate(*lim, {Value(v)});
    for (int j = 0; j < 2; ++j) {
      EXPECT_DOUBLE_EQ(r(j), std::max(0.0, v(j) - 1.0) + std::max(0.0, -1.0 - v(j)));
    }
  }

  auto cost = cost_factor(graph::acceleration_key(0), iso(2, 0.5));
  EXPECT_TRUE(evaluate(*cost, {Value(Eigen::Vector2d(0.2, -0.1))})
                  .isApprox(Eigen::Vector2d(0.2, -0.1)));
  graph::Values vals;
  vals.insert(graph::acceleration_key(0), Eigen::Vector2d(0.2, -0.1));
  EXPECT_NEAR(cost->error(vals), (0.04 + 0.01) / 0.25, 1e-14);

  auto ca = const_acc_factor(graph::acceleration_key(0), graph::acceleration_key(1),
                             iso(2, 0.1));
  EXPECT_TRUE(evaluate(*ca, {Value(Eigen::Vector2d(0, 0)), Value(Eigen::Vector2d(1, 0))})
                  .isApprox(Eigen::Vector2d(1, 0)));

  auto goal = goal_factor(graph::robot_pose_key(3), Pose2(), iso(3, 0.1));
  EXPECT_TRUE(evaluate(*goal, {Value(Pose2(1, 0, 0))}).isApprox(Eigen::Vector3d(1, 0, 0)));
  EXPECT_TRUE(evaluate(*goal, {Value(Pose2())}).isZero(0.0));
}

TEST(StaticObstacleFactorTest, HingeArithmetic) {
  worldmap::OccupancyGrid grid({100, 100, 0.1, Eigen::Vector2d::Zero()});
  grid.set_occupied(0, 50);
  auto esdf = std::make_shared<const worldmap::EsdfGrid>(worldmap::compute_esdf(grid));
  auto f = static_obstacle_factor(graph::robot_pose_key(1), esdf, 0.5, std::nullopt,
                                  iso(1, 0.05), graph::Component::Planning);
  EXPECT_EQ(evaluate(*f, {Value(Pose2(5.0, 5.0, 0))})(0), 0.0);
  EXPECT_NEAR(evaluate(*f, {Value(Pose2(0.2, 5.0, 0))})(0), 0.3, 1e-12);
  // Outside the map reads distance 0.
  EXPECT_NEAR(evaluate(*f, {Value(Pose2(-1.0, 5.0, 0))})(0), 0.5, 1e-12);
  EXPECT_THROW(static_obstacle_factor(graph::motion_key(1, 2), esdf, 0.5, std::nullopt,
                                      iso(1, 0.05), graph::Component::Prediction),
               std::invalid_argument);
}

TEST(DynamicObstacleFactorTest, HingeAndDirection) {
  const ObjectModel obj{1, Pose3::planar(3.0, 0, 0), 0.3};
  auto f = dynamic_obstacle_factor(graph::robot_pose_key(2), graph::motion_key(1, 2), obj, 1.0,
                                   iso(1, 0.05), ObstacleDirection::ToPlanning);
  EXPECT_EQ(evaluate(*f, {Value(Pose2()), Value(Pose3())})(0), 0.0);
  EXPECT_NEAR(evaluate(*f, {Value(Pose2(2.4, 0, 0)), Value(Pose3())})(0), 0.4, 1e-12);
  EXPECT_FALSE(f->is_directed(0));
  EXPECT_TRUE(f->is_directed(1));
  auto g = dynamic_obstacle_factor(graph::robot_pose_key(2), graph::motion_key(1, 2), obj, 1.0,
                                   iso(1, 0.05), ObstacleDirection::ToPrediction);
  EXPECT_TRUE(g->is_directed(0));
  EXPECT_FALSE(g->is_directed(1));
  EXPECT_EQ(g->component(), graph::Component::Prediction);
}

namespace {

// Component assignment used by the toy-style graphs below.
graph::Component component_of(const graph::VariableKey& k) {
  if (k.kind == graph::VariableKind::ObjectMotion) {
    return k.time_step > 2 ? graph::Component::Prediction : graph::Component::Estimation;
  }
  return k.time_step > 2 ? graph::Component::Planning : graph::Component::Estimation;
}

}  // namespace

TEST(ModeMaskTest, DirectedMasksUpstreamKeys) {
  auto r3 = std::make_shared<BetweenFactor>(graph::robot_pose_key(2), graph::robot_pose_key(3),
                                            Pose3(), iso(6, 1), graph::Component::Planning);
  auto r2 = odometry_factor(graph::robot_pose_key(1), graph::robot_pose_key(2), Pose3(),
                            iso(6, 1));
  const ObjectModel obj{1, Pose3(), 0.3};
  auto obs = dynamic_obstacle_factor(graph::robot_pose_key(4), graph::motion_key(1, 4), obj, 1.0,
                                     iso(1, 0.05), ObstacleDirection::ToPlanning);

  auto directed = apply_mode_masks({r3, r2, obs}, {Mode::Directed, 0.0}, component_of);
  ASSERT_EQ(directed.size(), 3u);
  EXPECT_TRUE(r3->is_directed(0));
  EXPECT_FALSE(r3->is_directed(1));
  EXPECT_FALSE(r2->has_directed_keys());
  EXPECT_TRUE(obs->is_directed(1));

  apply_mode_masks({r3, r2, obs}, {Mode::Undirected, 0.0}, component_of);
  EXPECT_FALSE(r3->has_directed_keys());
  EXPECT_FALSE(obs->has_directed_keys());

  apply_mode_masks({r3, r2, obs}, {Mode::Decoupled, 0.0}, component_of);
  EXPECT_FALSE(r3->has_directed_keys());
  EXPECT_TRUE(obs->is_directed(1));

  auto coop = apply_mode_masks({r3, r2, obs}, {Mode::Cooperative, 0.5}, component_of);
  ASSERT_EQ(coop.size(), 4u);
  auto* rev = dynamic_cast<DynamicObstacleFactor*>(coop.back().get());
  ASSERT_NE(rev, nullptr);
  EXPECT_EQ(rev->direction(), ObstacleDirection::ToPrediction);
  EXPECT_TRUE(rev->is_directed(0));
  EXPECT_TRUE(rev->noise().sqrt_information().isApprox(
      0.5 * obs->noise().sqrt_information()));

  EXPECT_EQ(apply_mode_masks({r3, r2, obs}, {Mode::Cooperative, 0.0}, component_of).size(), 3u);
}

TEST(ModeMaskTest, ParseModeNames) {
  for (Mode m : {Mode::Undirected, Mode::Directed, Mode::Decoupled, Mode::Cooperative}) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_mode("sideways"), std::invalid_argument);
}

TEST(ModeMaskTest, ResidualsIndependentOfMode) {
  std::mt19937 rng(10);
  for (const auto& gen : testkit::factor_generators()) {
    const auto s = gen.make(rng);
    const Eigen::VectorXd before = evaluate(*s.factor, s.values);
    s.factor->clear_directed();
    EXPECT_EQ((evaluate(*s.factor, s.values) - before).norm(), 0.0) << gen.name;
  }
}
