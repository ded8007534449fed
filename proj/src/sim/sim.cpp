#include "dfg/sim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dfg/factors/factors.hpp"

namespace dfg::sim {

namespace {

double standard_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

Eigen::Vector3d noise3(std::mt19937_64& rng, double sigma) {
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) v(i) = sigma * standard_normal(rng);
  return v;
}

Pose3 perturb(const Pose3& pose, std::mt19937_64& rng, double sigma_t, double sigma_r) {
  lie::Tangent6 xi;
  xi.head<3>() = noise3(rng, sigma_t);
  xi.tail<3>() = noise3(rng, sigma_r);
  return pose * lie::se3_exp(xi);
}

bool in_view(const Pose2& ego, const Eigen::Vector2d& p, const SensorSpec& s) {
  const Eigen::Vector2d local = ego.rotation().transpose() * (p - ego.translation());
  const double range = local.norm();
  if (range > s.max_range || range < 1e-6) return false;
  return std::abs(std::atan2(local.y(), local.x())) <= 0.5 * s.fov;
}

std::vector<Eigen::Vector3d> body_points(const World& world, std::size_t i) {
  const auto& spec = world.agents[i];
  if (!spec.body_points.empty()) return spec.body_points;
  return sphere_points(spec.radius, world.sensor.points_per_object);
}

void advance_agent(const AgentSpec& spec, AgentState& a, const Eigen::Vector2d& ego, int step,
                   double dt) {
  a.speed = 0.0;
  if (step < spec.start_step) return;
  Eigen::Vector2d pos = a.pose.translation();
  const double reach = std::max(spec.speed * dt, 0.05);
  while (a.target < spec.waypoints.size() && (spec.waypoints[a.target] - pos).norm() < reach) {
    ++a.target;
  }
  if (a.target >= spec.waypoints.size()) return;

  Eigen::Vector2d dir = (spec.waypoints[a.target] - pos).normalized();
  double speed = spec.speed;
  if (spec.behavior == AgentBehavior::Reactive) {
    const Eigen::Vector2d off = pos - ego;
    const double d = off.norm();
    if (d < spec.avoid_radius && d > 1e-9) {
      const double w = spec.avoid_gain * (1.0 - d / spec.avoid_radius);
      const Eigen::Vector2d biased = dir + w * off / d;
      if (biased.norm() > 1e-9) dir = biased.normalized();
      speed *= std::clamp(1.0 - 0.5 * w, 0.3, 1.0);
    }
  }
  const double err = lie::wrap_angle(std::atan2(dir.y(), dir.x()) - a.pose.theta());
  const double omega =
      std::clamp(spec.heading_gain * err, -spec.max_turn_rate, spec.max_turn_rate);
  speed *= std::max(0.0, std::cos(err));
  a.speed = speed;
  a.pose = factors::unicycle_step(a.pose, Eigen::Vector2d(speed, omega), dt);
}

}  // namespace

void AgentSpec::validate() const {
  if (!(speed > 0.0)) throw std::invalid_argument("agent speed must be positive");
  if (waypoints.empty()) throw std::invalid_argument("agent needs at least one waypoint");
  if (!body_points.empty() && body_points.size() < 3) {
    throw std::invalid_argument("agent needs at least 3 body points");
  }
  if (!(radius > 0.0)) throw std::invalid_argument("agent radius must be positive");
}

std::vector<Eigen::Vector3d> sphere_points(double radius, int count) {
  if (count < 3) throw std::invalid_argument("at least 3 body points are required");
  std::vector<Eigen::Vector3d> pts;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = golden * i;
    pts.emplace_back(radius * r * std::cos(phi), radius * r * std::sin(phi), radius * z);
  }
  return pts;
}

std::vector<Landmark> random_landmarks(const worldmap::GridGeometry& g, double density,
                                       std::mt19937_64& rng) {
  const Eigen::Vector2d lo = g.origin;
  const Eigen::Vector2d size = g.resolution * Eigen::Vector2d(g.width - 1, g.height - 1);
  const int count = static_cast<int>(std::lround(density * size.x() * size.y()));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Landmark> out;
  for (int i = 0; i < count; ++i) {
    const double x = lo.x() + u(rng) * size.x();
    const double y = lo.y() + u(rng) * size.y();
    const double z = 0.2 + 1.3 * u(rng);
    out.push_back({i, Eigen::Vector3d(x, y, z)});
  }
  return out;
}

namespace {

AgentState initial_agent(const AgentSpec& spec) {
  AgentState a;
  const Eigen::Vector2d p0 = spec.waypoints.front();
  double heading = 0.0;
  if (spec.waypoints.size() > 1) {
    const Eigen::Vector2d d = spec.waypoints[1] - p0;
    heading = std::atan2(d.y(), d.x());
  }
  a.pose = Pose2(p0.x(), p0.y(), heading);
  return a;
}

}  // namespace

WorldState initial_state(const World& world, const Pose2& ego_start, std::uint64_t seed) {
  WorldState s;
  s.rng.seed(seed);
  s.ego = ego_start;
  s.previous_ego = ego_start;
  for (const auto& spec : world.agents) {
    spec.validate();
    s.agents.push_back(initial_agent(spec));
  }
  return s;
}

std::vector<Eigen::Vector2d> nominal_trajectory(const AgentSpec& spec, double dt, int steps) {
  spec.validate();
  AgentSpec scripted = spec;
  scripted.behavior = AgentBehavior::Scripted;
  AgentState a = initial_agent(scripted);
  std::vector<Eigen::Vector2d> out{a.pose.translation()};
  for (int k = 0; k < steps; ++k) {
    advance_agent(scripted, a, Eigen::Vector2d::Zero(), k, dt);
    out.push_back(a.pose.translation());
  }
  return out;
}

Pose3 agent_com(const World& world, const WorldState& state, std::size_t i) {
  const Pose2& p = state.agents.at(i).pose;
  return Pose3::planar(p.x(), p.y(), p.theta(), world.agents.at(i).radius);
}

Pose3 ego_pose3(const WorldState& state) { return lie::embed_se3(state.ego); }

pipeline::StepInput sense(const World& world, WorldState& state) {
  const SensorSpec& s = world.sensor;
  pipeline::StepInput in;
  const Pose3 x = ego_pose3(state);
  if (state.step > 0) {
    const Pose3 rel = lie::embed_se3(state.previous_ego).between(x);
    in.odometry = perturb(rel, state.rng, s.odometry_translation_sigma, s.odometry_rotation_sigma);
  }
  if (s.localization_period > 0 && state.step % s.localization_period == 0) {
    in.global_pose =
        perturb(x, state.rng, s.localization_translation_sigma, s.localization_rotation_sigma);
  }
  for (const auto& lm : world.landmarks) {
    if (!in_view(state.ego, lm.position.head<2>(), s)) continue;
    const Eigen::Vector3d z = x.transform_to(lm.position) + noise3(state.rng, s.noise_sigma);
    in.static_points.push_back({lm.id, z});
  }
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const Pose3 c = agent_com(world, state, i);
    if (!in_view(state.ego, c.translation().head<2>(), s)) continue;
    const auto& spec = world.agents[i];
    in.detections.push_back({spec.object_id, spec.radius, c});
    const auto pts = body_points(world, i);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const Eigen::Vector3d z = x.transform_to(c * pts[j]) + noise3(state.rng, s.noise_sigma);
      in.dynamic_points.push_back({spec.object_id, static_cast<int>(j), z});
    }
  }
  return in;
}

void tick(const World& world, WorldState& state, const Eigen::Vector2d& command) {
  const Eigen::Vector2d ego_before = state.ego.translation();
  state.previous_ego = state.ego;
  state.ego_velocity = (state.ego_velocity + command * world.dt)
                           .cwiseMax(world.velocity_min)
                           .cwiseMin(world.velocity_max);
  state.ego = factors::unicycle_step(state.ego, state.ego_velocity, world.dt);
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    advance_agent(world.agents[i], state.agents[i], ego_before, state.step, world.dt);
  }
  ++state.step;
}

bool check_collision(const World& world, const WorldState& state) {
  const Eigen::Vector2d p = state.ego.translation();
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const double d = (state.agents[i].pose.translation() - p).norm();
    if (d < world.robot_radius + world.agents[i].radius) return true;
  }
  return world.grid && world.grid->disc_hits_occupied(p, world.robot_radius);
}

double clearance(const World& world, const WorldState& state, const worldmap::EsdfGrid& esdf) {
  const Eigen::Vector2d p = state.ego.translation();
  const double half_diag = 0.5 * std::sqrt(2.0) * esdf.geometry().resolution;
  double c = esdf.query(p) - half_diag - world.robot_radius;
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const double d = (state.agents[i].pose.translation() - p).norm();
    c = std::min(c, d - world.robot_radius - world.agents[i].radius);
  }
  return c;
}

}  // namespace dfg::sim
