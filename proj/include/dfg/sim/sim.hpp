#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "dfg/lie/pose2.hpp"
#include "dfg/lie/pose3.hpp"
#include "dfg/pipeline/pipeline.hpp"
#include "dfg/worldmap/esdf.hpp"

namespace dfg::sim {

using lie::Pose2;
using lie::Pose3;

enum class AgentBehavior { Scripted, Reactive };

/// A differential-drive agent following waypoints. Its centre of mass sits
/// at height `radius` above its planar pose.
struct AgentSpec {
  int object_id = 1;
  double radius = 0.25;
  AgentBehavior behavior = AgentBehavior::Scripted;
  /// The first waypoint is the start position.
  std::vector<Eigen::Vector2d> waypoints;
  double speed = 0.4;
  /// The agent waits at its start until this step.
  int start_step = 0;
  double max_turn_rate = 2.0;
  double heading_gain = 3.0;
  /// Reactive agents only.
  double avoid_radius = 1.5;
  double avoid_gain = 1.0;
  /// Body-frame points on the sphere surface; generated when empty.
  std::vector<Eigen::Vector3d> body_points;

  /// Throws std::invalid_argument for speed <= 0, no waypoints or fewer than
  /// 3 body points.
  void validate() const;
};

/// `count` points spread over the sphere of the given radius (Fibonacci
/// lattice).
std::vector<Eigen::Vector3d> sphere_points(double radius, int count);

struct SensorSpec {
  double fov = 2.0943951023931953;  // 120 degrees
  double max_range = 6.0;
  double noise_sigma = 0.1;
  int points_per_object = 8;
  /// Landmarks per square metre, placed at random when a scenario lists none.
  double landmark_density = 0.3;
  double odometry_translation_sigma = 0.01;
  double odometry_rotation_sigma = 0.005;
  /// Global pose measurement every `localization_period` steps (0 = never).
  int localization_period = 10;
  double localization_translation_sigma = 0.05;
  double localization_rotation_sigma = 0.02;
};

struct Landmark {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Static description of a simulated world.
struct World {
  std::shared_ptr<const worldmap::OccupancyGrid> grid;
  std::vector<Landmark> landmarks;
  std::vector<AgentSpec> agents;
  SensorSpec sensor;
  double dt = 0.1;
  Eigen::Vector2d velocity_min{-0.1, -1.0};
  Eigen::Vector2d velocity_max{0.6, 1.0};
  double robot_radius = 0.2;
};

struct AgentState {
  Pose2 pose;
  double speed = 0.0;
  std::size_t target = 1;  // index of the waypoint being approached
};

struct WorldState {
  int step = 0;
  Pose2 ego;
  Pose2 previous_ego;
  Eigen::Vector2d ego_velocity = Eigen::Vector2d::Zero();
  std::vector<AgentState> agents;
  std::mt19937_64 rng;
};

/// Uniform landmarks over the grid area at heights in [0.2, 1.5] m.
std::vector<Landmark> random_landmarks(const worldmap::GridGeometry& geometry, double density,
                                       std::mt19937_64& rng);

WorldState initial_state(const World& world, const Pose2& ego_start, std::uint64_t seed);

/// Positions of an agent at steps 0..steps when it ignores the ego and just
/// follows its waypoints.
std::vector<Eigen::Vector2d> nominal_trajectory(const AgentSpec& spec, double dt, int steps);

/// Centre-of-mass pose of agent `i`.
Pose3 agent_com(const World& world, const WorldState& state, std::size_t i);

/// Ego pose lifted to SE(3).
Pose3 ego_pose3(const WorldState& state);

/// Noisy observations of the current state. Draws sensor noise from the
/// state's random stream.
pipeline::StepInput sense(const World& world, WorldState& state);

/// Executes the ego command and advances every agent by one step.
void tick(const World& world, WorldState& state, const Eigen::Vector2d& command);

/// True iff the ego disc overlaps an agent disc (strictly) or an occupied
/// cell.
bool check_collision(const World& world, const WorldState& state);

/// Signed clearance of the ego disc: to agent discs exactly, to occupied
/// cells through the distance field minus half a cell diagonal.
double clearance(const World& world, const WorldState& state, const worldmap::EsdfGrid& esdf);

}  // namespace dfg::sim
