#include <gtest/gtest.h>

#include <cmath>

#include "dfg/sim/sim.hpp"

using namespace dfg;
using lie::Pose2;
using lie::Pose3;
using sim::AgentSpec;
using sim::World;

namespace {

AgentSpec straight_agent(double y0, double y1, double x = 2.0) {
  AgentSpec a;
  a.object_id = 1;
  a.waypoints = {{x, y0}, {x, y1}};
  return a;
}

World quiet_world() {
  World w;
  w.sensor.noise_sigma = 0.0;
  w.sensor.odometry_translation_sigma = 0.0;
  w.sensor.odometry_rotation_sigma = 0.0;
  w.sensor.localization_translation_sigma = 0.0;
  w.sensor.localization_rotation_sigma = 0.0;
  return w;
}

}  // namespace

TEST(SpherePoints, LieOnSphere) {
  const auto pts = sim::sphere_points(0.3, 12);
  ASSERT_EQ(pts.size(), 12u);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) {
    EXPECT_NEAR(p.norm(), 0.3, 1e-12);
    mean += p;
  }
  EXPECT_LT((mean / 12.0).norm(), 0.05);
}

TEST(AgentSpec, Validation) {
  AgentSpec a = straight_agent(-1, 1);
  EXPECT_NO_THROW(a.validate());
  a.speed = 0.0;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a = straight_agent(-1, 1);
  a.waypoints.clear();
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a = straight_agent(-1, 1);
  a.body_points = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()};
  EXPECT_THROW(a.validate(), std::invalid_argument);
}

TEST(Sense, AgentBehindIsNotObserved) {
  World w = quiet_world();
  w.agents = {straight_agent(-1, 1, -2.0)};
  auto s = sim::initial_state(w, Pose2(), 1);
  const auto in = sim::sense(w, s);
  EXPECT_TRUE(in.dynamic_points.empty());
  EXPECT_TRUE(in.detections.empty());
}

TEST(Sense, NoiseFreeObservationsAreExact) {
  World w = quiet_world();
  w.agents = {straight_agent(-0.5, 1)};
  w.landmarks = {{0, {3.0, 1.0, 0.5}}, {1, {-3.0, 0.0, 0.5}}};
  auto s = sim::initial_state(w, Pose2(0.2, 0.1, 0.3), 1);
  const auto in = sim::sense(w, s);
  const Pose3 x = sim::ego_pose3(s);
  ASSERT_EQ(in.static_points.size(), 1u);
  EXPECT_EQ(in.static_points[0].landmark_id, 0);
  EXPECT_LT((x * in.static_points[0].point - w.landmarks[0].position).norm(), 1e-12);
  const auto pts = sim::sphere_points(0.25, w.sensor.points_per_object);
  const Pose3 c = sim::agent_com(w, s, 0);
  ASSERT_EQ(in.dynamic_points.size(), pts.size());
  for (const auto& obs : in.dynamic_points) {
    EXPECT_LT((x * obs.point - c * pts[obs.point_id]).norm(), 1e-12);
  }
  ASSERT_TRUE(in.global_pose.has_value());
  EXPECT_LT(lie::se3_log(x.between(*in.global_pose)).norm(), 1e-12);
}

TEST(Sense, PointNoiseHasConfiguredSpread) {
  World w;
  w.sensor.noise_sigma = 0.1;
  for (int i = 0; i < 100; ++i) {
    w.landmarks.push_back({i, {2.0 + 0.02 * i, 0.5, 0.3}});
  }
  auto s = sim::initial_state(w, Pose2(), 4);
  const Pose3 x = sim::ego_pose3(s);
  double sum = 0.0, sum2 = 0.0;
  int n = 0;
  for (int rep = 0; rep < 34; ++rep) {
    const auto in = sim::sense(w, s);
    for (const auto& obs : in.static_points) {
      const Eigen::Vector3d err = x * obs.point - w.landmarks[obs.landmark_id].position;
      for (int d = 0; d < 3; ++d) {
        sum += err(d);
        sum2 += err(d) * err(d);
        ++n;
      }
    }
  }
  ASSERT_GE(n, 10000);
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  EXPECT_NEAR(sd, 0.1, 0.005);
}

TEST(Sense, SameSeedSameObservations) {
  World w;
  w.agents = {straight_agent(-0.5, 1)};
  w.landmarks = {{0, {3.0, 1.0, 0.5}}};
  auto a = sim::initial_state(w, Pose2(), 9);
  auto b = sim::initial_state(w, Pose2(), 9);
  for (int k = 0; k < 5; ++k) {
    const auto ia = sim::sense(w, a);
    const auto ib = sim::sense(w, b);
    ASSERT_EQ(ia.dynamic_points.size(), ib.dynamic_points.size());
    for (std::size_t i = 0; i < ia.dynamic_points.size(); ++i) {
      EXPECT_EQ(ia.dynamic_points[i].point, ib.dynamic_points[i].point);
    }
    sim::tick(w, a, Eigen::Vector2d(0.5, 0.1));
    sim::tick(w, b, Eigen::Vector2d(0.5, 0.1));
  }
}

TEST(Tick, ZeroCommandAtRestOnlyAdvancesStep) {
  World w;
  auto s = sim::initial_state(w, Pose2(1.0, 2.0, 0.3), 1);
  sim::tick(w, s, Eigen::Vector2d::Zero());
  EXPECT_EQ(s.step, 1);
  EXPECT_EQ(s.ego.translation(), Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(s.ego.theta(), 0.3);
}

TEST(Tick, UnitAccelerationFromRest) {
  World w;
  auto s = sim::initial_state(w, Pose2(), 1);
  sim::tick(w, s, Eigen::Vector2d(1.0, 0.0));
  EXPECT_NEAR(s.ego_velocity.x(), 0.1, 1e-15);
  EXPECT_NEAR(s.ego.x(), 0.01, 1e-15);
  EXPECT_NEAR(s.ego.y(), 0.0, 1e-15);
}

TEST(Tick, VelocityIsClampedToBounds) {
  World w;
  auto s = sim::initial_state(w, Pose2(), 1);
  for (int k = 0; k < 50; ++k) sim::tick(w, s, Eigen::Vector2d(1.0, 2.0));
  EXPECT_DOUBLE_EQ(s.ego_velocity.x(), w.velocity_max.x());
  EXPECT_DOUBLE_EQ(s.ego_velocity.y(), w.velocity_max.y());
}

TEST(Tick, ScriptedAgentWaitsThenFollowsWaypoints) {
  World w;
  AgentSpec a = straight_agent(-1.0, 1.0);
  a.start_step = 3;
  w.agents = {a};
  auto s = sim::initial_state(w, Pose2(-5.0, 0.0, 0.0), 1);
  for (int k = 0; k < 3; ++k) sim::tick(w, s, Eigen::Vector2d::Zero());
  EXPECT_EQ(s.agents[0].pose.translation(), Eigen::Vector2d(2.0, -1.0));
  for (int k = 0; k < 10; ++k) sim::tick(w, s, Eigen::Vector2d::Zero());
  EXPECT_NEAR(s.agents[0].pose.y(), -1.0 + 10 * 0.04, 1e-9);
  EXPECT_NEAR(s.agents[0].pose.x(), 2.0, 1e-9);
}

TEST(Tick, ReactiveAgentFarAwayMatchesScripted) {
  World ws, wr;
  AgentSpec a = straight_agent(-1.0, 1.0);
  ws.agents = {a};
  a.behavior = sim::AgentBehavior::Reactive;
  wr.agents = {a};
  auto s = sim::initial_state(ws, Pose2(-5.0, 0.0, 0.0), 1);
  auto r = sim::initial_state(wr, Pose2(-5.0, 0.0, 0.0), 1);
  for (int k = 0; k < 40; ++k) {
    sim::tick(ws, s, Eigen::Vector2d::Zero());
    sim::tick(wr, r, Eigen::Vector2d::Zero());
    EXPECT_EQ(s.agents[0].pose.translation(), r.agents[0].pose.translation());
  }
}

TEST(Tick, ReactiveAgentGivesWayWithinSpeedBound) {
  World w;
  AgentSpec a = straight_agent(-2.0, 2.0);
  a.behavior = sim::AgentBehavior::Reactive;
  w.agents = {a};
  auto s = sim::initial_state(w, Pose2(1.6, 0.0, 0.0), 1);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector2d before = s.agents[0].pose.translation();
    sim::tick(w, s, Eigen::Vector2d::Zero());
    EXPECT_LE(s.agents[0].speed, a.speed + 1e-12);
    EXPECT_LE((s.agents[0].pose.translation() - before).norm(), a.speed * w.dt + 1e-12);
    worst = std::max(worst, std::abs(s.agents[0].pose.x() - 2.0));
  }
  EXPECT_GT(worst, 0.05);
}

TEST(NominalTrajectory, MatchesScriptedSimulation) {
  World w;
  AgentSpec a = straight_agent(-1.0, 1.0);
  a.waypoints.push_back({3.0, 1.5});
  a.start_step = 2;
  w.agents = {a};
  a.behavior = sim::AgentBehavior::Reactive;
  const auto nominal = sim::nominal_trajectory(a, w.dt, 60);
  ASSERT_EQ(nominal.size(), 61u);
  auto s = sim::initial_state(w, Pose2(1.0, 0.0, 0.0), 1);
  for (int k = 0; k < 60; ++k) {
    EXPECT_EQ(nominal[k], s.agents[0].pose.translation());
    sim::tick(w, s, Eigen::Vector2d::Zero());
  }
}

TEST(Collision, Boundaries) {
  World w;
  w.robot_radius = 0.2;
  w.agents = {straight_agent(0.0, 1.0, 5.0)};
  auto s = sim::initial_state(w, Pose2(), 1);
  EXPECT_FALSE(sim::check_collision(w, s));
  s.agents[0].pose = Pose2(0.0, 0.0, 0.0);
  EXPECT_TRUE(sim::check_collision(w, s));
  const double touch = w.robot_radius + w.agents[0].radius;
  s.agents[0].pose = Pose2(touch, 0.0, 0.0);
  EXPECT_FALSE(sim::check_collision(w, s));
  s.agents[0].pose = Pose2(touch - 1e-9, 0.0, 0.0);
  EXPECT_TRUE(sim::check_collision(w, s));
}

TEST(Collision, OccupiedCells) {
  worldmap::OccupancyGrid grid({40, 40, 0.05, Eigen::Vector2d(-1.0, -1.0)});
  grid.fill_box(Eigen::Vector2d(0.5, -1.0), Eigen::Vector2d(0.95, 0.95));
  World w;
  w.grid = std::make_shared<const worldmap::OccupancyGrid>(grid);
  auto s = sim::initial_state(w, Pose2(0.0, 0.0, 0.0), 1);
  EXPECT_FALSE(sim::check_collision(w, s));
  s.ego = Pose2(0.4, 0.0, 0.0);
  EXPECT_TRUE(sim::check_collision(w, s));
}

TEST(Clearance, AgentsAndWalls) {
  worldmap::OccupancyGrid grid({80, 80, 0.05, Eigen::Vector2d(-2.0, -2.0)});
  grid.fill_box(Eigen::Vector2d(1.5, -2.0), Eigen::Vector2d(1.95, 1.95));
  const worldmap::EsdfGrid esdf = worldmap::compute_esdf(grid);
  World w;
  w.grid = std::make_shared<const worldmap::OccupancyGrid>(grid);
  w.agents = {straight_agent(0.0, 1.0, -1.0)};
  auto s = sim::initial_state(w, Pose2(), 1);
  EXPECT_NEAR(sim::clearance(w, s, esdf), 1.0 - 0.2 - 0.25, 1e-12);
  s.agents[0].pose = Pose2(-1.5, -1.5, 0.0);
  const double wall = esdf.query(Eigen::Vector2d::Zero()) - 0.5 * std::sqrt(2.0) * 0.05 - 0.2;
  EXPECT_NEAR(sim::clearance(w, s, esdf), wall, 1e-12);
}
