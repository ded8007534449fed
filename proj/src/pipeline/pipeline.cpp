#include "dfg/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dfg::pipeline {

using graph::Component;
using graph::NoiseModel;
using graph::VariableKind;

namespace {

NoiseModel pose_noise(double t, double r) { return NoiseModel::sigmas({t, t, t, r, r, r}); }

// Constant-motion extrapolation of the CoM, expressed back as motions.
std::vector<Pose3> extrapolate(const Pose3& h_km1, const Pose3& h_k, const Pose3& com_ref,
                               int n) {
  const Pose3 c_km1 = factors::com_pose(h_km1, com_ref);
  Pose3 c = factors::com_pose(h_k, com_ref);
  const Pose3 delta = c_km1.between(c);
  const Pose3 ref_inv = com_ref.inverse();
  std::vector<Pose3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    c = c * delta;
    out.push_back(c * ref_inv);
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (lag_window < 2) throw std::invalid_argument("lag window must be at least 2");
  if ((velocity_min.array() > velocity_max.array()).any() ||
      (acceleration_min.array() > acceleration_max.array()).any()) {
    throw std::invalid_argument("inverted velocity or acceleration bounds");
  }
  if (robot_radius < 0.0 || safety_offset < 0.0) {
    throw std::invalid_argument("radius and safety offset must be non-negative");
  }
}

void GraphFragment::add_variable(const VariableKey& key, Value value, bool fix) {
  variables.emplace_back(key, std::move(value));
  if (fix) fixed.insert(key);
}

void GraphFragment::append(GraphFragment other) {
  for (auto& v : other.variables) variables.push_back(std::move(v));
  fixed.insert(other.fixed.begin(), other.fixed.end());
  for (auto& f : other.factors) factors.push_back(std::move(f));
}

void GraphFragment::insert_into(graph::FactorGraph& g) const {
  for (const auto& [key, value] : variables) {
    if (g.has_variable(key)) continue;
    g.add_variable(key, value);
    if (fixed.contains(key)) g.fix_variable(key);
  }
  for (const auto& f : factors) g.add_factor(f);
}

factors::ComponentOf step_components(int k) {
  return [k](const VariableKey& key) {
    switch (key.kind) {
      case VariableKind::RobotPose:
      case VariableKind::Velocity:
        return key.time_step <= k ? Component::Estimation : Component::Planning;
      case VariableKind::Acceleration:
        return key.time_step <= k - 1 ? Component::Estimation : Component::Planning;
      case VariableKind::ObjectMotion:
        return key.time_step <= k ? Component::Estimation : Component::Prediction;
      default:
        return Component::Estimation;
    }
  };
}

PredictionProblem build_prediction_problem(int object_id, int k, const Pose3& motion_km1,
                                           const Pose3& motion_k, const Pose3& com_reference,
                                           int horizon, double obstacle_distance,
                                           std::shared_ptr<const worldmap::EsdfGrid> esdf,
                                           const NoiseTable& noise) {
  PredictionProblem p;
  auto& g = p.graph;
  g.add_variable(graph::motion_key(object_id, k - 1), motion_km1);
  g.add_variable(graph::motion_key(object_id, k), motion_k);
  g.fix_variable(graph::motion_key(object_id, k - 1));
  g.fix_variable(graph::motion_key(object_id, k));
  const factors::ObjectModel model{object_id, com_reference, 0.0};
  for (int i = 1; i <= horizon; ++i) {
    const auto key = graph::motion_key(object_id, k + i);
    g.add_variable(key, motion_k);
    p.predicted.push_back(key);
    g.add_factor(factors::object_smoothing_factor(
        graph::motion_key(object_id, k + i - 2), graph::motion_key(object_id, k + i - 1), key,
        com_reference, NoiseModel::isotropic(6, noise.smoothing), Component::Prediction));
    if (esdf) {
      g.add_factor(factors::static_obstacle_factor(key, esdf, obstacle_distance, model,
                                                   NoiseModel::isotropic(1, noise.prediction_obstacle),
                                                   Component::Prediction));
    }
  }
  return p;
}

Pose2 select_local_goal(const std::vector<Pose2>& path, const Pose2& current, double lookahead) {
  if (path.empty()) throw std::invalid_argument("select_local_goal: empty path");
  std::size_t closest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double d = (path[i].translation() - current.translation()).norm();
    if (d < best) {
      best = d;
      closest = i;
    }
  }
  std::size_t goal = closest;
  double s = 0.0;
  for (std::size_t i = closest + 1; i < path.size(); ++i) {
    s += (path[i].translation() - path[i - 1].translation()).norm();
    if (s > lookahead) break;
    goal = i;
  }
  return path[goal];
}

MotionError compute_motion_error(const std::vector<Pose3>& estimated,
                                 const std::vector<Pose3>& ground_truth) {
  if (estimated.size() != ground_truth.size()) {
    throw std::invalid_argument("compute_motion_error: sequences differ in length");
  }
  MotionError me;
  if (estimated.empty()) return me;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const Pose3 e = ground_truth[i].between(estimated[i]);
    me.translation += e.translation().norm();
    const double c = std::clamp(0.5 * (e.rotation().trace() - 1.0), -1.0, 1.0);
    me.rotation_deg += std::acos(c) * 180.0 / M_PI;
  }
  const double n = static_cast<double>(estimated.size());
  me.translation /= n;
  me.rotation_deg /= n;
  return me;
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<const worldmap::EsdfGrid> esdf,
                   const Pose3& start, const Eigen::Vector2d& start_velocity)
    : config_(std::move(config)), esdf_(std::move(esdf)), start_(start) {
  config_.validate();
  if (!esdf_) throw std::invalid_argument("pipeline needs a distance field");
  velocity_ = clamp_velocity(start_velocity);
}

Eigen::Vector2d Pipeline::clamp_velocity(const Eigen::Vector2d& v) const {
  return v.cwiseMax(config_.velocity_min).cwiseMin(config_.velocity_max);
}

bool Pipeline::track_alive(const Track& t, int k) const {
  if (t.last_seen == k) return true;
  return k - t.last_seen <= config_.track_timeout && k - t.reference_step >= 2;
}

bool Pipeline::can_predict(const Track& t, int k) const { return k - t.reference_step >= 2; }

GraphFragment Pipeline::build_estimation(int k, const StepInput& input) {
  if (k != k_) throw std::logic_error("build_estimation: steps must be consecutive");
  const auto& nt = config_.noise;
  const VariableKey xk = graph::robot_pose_key(k);

  Pose3 pose = start_;
  auto& fs = estimation_factors_[k];
  fs.clear();
  if (k == 0) {
    fs.push_back(factors::prior_factor(
        xk, start_, pose_noise(nt.pose_prior_translation, nt.pose_prior_rotation)));
  } else {
    if (!input.odometry) throw std::invalid_argument("odometry is required after step 0");
    pose = estimates_.get<Pose3>(graph::robot_pose_key(k - 1)) * *input.odometry;
    fs.push_back(factors::odometry_factor(graph::robot_pose_key(k - 1), xk, *input.odometry,
                                          pose_noise(nt.odometry_translation,
                                                     nt.odometry_rotation)));
  }
  estimates_.insert_or_assign(xk, pose);
  if (input.global_pose) {
    fs.push_back(factors::prior_factor(
        xk, *input.global_pose,
        pose_noise(nt.localization_translation, nt.localization_rotation)));
  }

  const NoiseModel point_noise = NoiseModel::isotropic(3, nt.point);
  for (const auto& obs : input.static_points) {
    const int anchor = landmark_anchor_.try_emplace(obs.landmark_id, k).first->second;
    const VariableKey key = graph::static_point_key(obs.landmark_id, anchor);
    if (!estimates_.contains(key)) estimates_.insert(key, Eigen::Vector3d(pose * obs.point));
    fs.push_back(factors::point_measurement_factor(xk, key, obs.point, point_noise));
  }

  for (const auto& det : input.detections) {
    auto it = tracks_.find(det.object_id);
    if (it == tracks_.end()) {
      Track t{det.object_id, k, det.com, det.radius, k};
      tracks_.emplace(det.object_id, t);
      const VariableKey h = graph::motion_key(det.object_id, k);
      estimates_.insert_or_assign(h, Pose3::identity());
      identity_motions_.insert(h);
    } else {
      it->second.last_seen = k;
    }
  }

  for (auto it = tracks_.begin(); it != tracks_.end();) {
    Track& t = it->second;
    if (!track_alive(t, k)) {
      last_prediction_.erase(t.object_id);
      it = tracks_.erase(it);
      continue;
    }
    const int e = t.reference_step;
    if (k > e) {
      const VariableKey h = graph::motion_key(t.object_id, k);
      Pose3 guess = estimates_.get<Pose3>(graph::motion_key(t.object_id, k - 1));
      if (auto p = last_prediction_.find(t.object_id); p != last_prediction_.end() &&
                                                       !p->second.empty()) {
        guess = p->second.front();
      }
      estimates_.insert_or_assign(h, guess);
      if (k - e >= 2) {
        fs.push_back(factors::object_smoothing_factor(
            graph::motion_key(t.object_id, k - 2), graph::motion_key(t.object_id, k - 1), h,
            t.com_reference, NoiseModel::isotropic(6, nt.smoothing)));
      }
    }
    ++it;
  }

  for (const auto& obs : input.dynamic_points) {
    const auto it = tracks_.find(obs.object_id);
    if (it == tracks_.end() || it->second.last_seen != k) continue;
    const Track& t = it->second;
    const int e = t.reference_step;
    const VariableKey m = graph::dynamic_point_key(t.object_id, obs.point_id, e);
    const VariableKey h = graph::motion_key(t.object_id, k);
    if (!estimates_.contains(m)) {
      const Eigen::Vector3d world = pose * obs.point;
      estimates_.insert(m, Eigen::Vector3d(estimates_.get<Pose3>(h).inverse() * world));
    }
    if (k == e) {
      fs.push_back(factors::point_measurement_factor(xk, m, obs.point, point_noise));
    } else {
      fs.push_back(factors::hybrid_motion_factor(xk, h, m, obs.point, point_noise));
    }
  }

  const int ws = std::max(0, k - config_.lag_window + 1);
  GraphFragment frag;
  std::set<VariableKey> seen;
  for (auto it = estimation_factors_.lower_bound(ws); it != estimation_factors_.end(); ++it) {
    for (const auto& f : it->second) {
      for (const auto& key : f->keys()) {
        if (!seen.insert(key).second) continue;
        const bool fix = key.time_step < ws || identity_motions_.contains(key);
        frag.add_variable(key, estimates_.at(key), fix);
      }
      frag.factors.push_back(f);
    }
  }
  return frag;
}

GraphFragment Pipeline::build_prediction(int k) {
  GraphFragment frag;
  const auto& nt = config_.noise;
  for (const auto& [id, t] : tracks_) {
    if (!can_predict(t, k)) continue;
    const VariableKey h_km1 = graph::motion_key(id, k - 1);
    const VariableKey h_k = graph::motion_key(id, k);
    frag.add_variable(h_km1, estimates_.at(h_km1), identity_motions_.contains(h_km1));
    frag.add_variable(h_k, estimates_.at(h_k));
    const auto guess = extrapolate(estimates_.get<Pose3>(h_km1), estimates_.get<Pose3>(h_k),
                                   t.com_reference, config_.horizon);
    const factors::ObjectModel model{id, t.com_reference, t.radius};
    for (int i = 1; i <= config_.horizon; ++i) {
      const VariableKey h = graph::motion_key(id, k + i);
      frag.add_variable(h, guess[static_cast<std::size_t>(i - 1)]);
      frag.factors.push_back(factors::object_smoothing_factor(
          graph::motion_key(id, k + i - 2), graph::motion_key(id, k + i - 1), h,
          t.com_reference, NoiseModel::isotropic(6, nt.smoothing), Component::Prediction));
      frag.factors.push_back(factors::static_obstacle_factor(
          h, esdf_, t.radius + config_.safety_offset, model,
          NoiseModel::isotropic(1, nt.prediction_obstacle), Component::Prediction));
    }
  }
  return frag;
}

GraphFragment Pipeline::build_planning(int k, const Pose2& local_goal) {
  GraphFragment frag;
  const auto& nt = config_.noise;
  const int n = config_.horizon;
  const double dt = config_.dt;
  const VariableKey xk = graph::robot_pose_key(k);
  const VariableKey vk = graph::velocity_key(k);
  const VariableKey a_prev = graph::acceleration_key(k - 1);

  frag.add_variable(vk, velocity_);
  frag.factors.push_back(
      factors::prior_factor(vk, velocity_, NoiseModel::isotropic(2, nt.state_prior)));
  // Step 0 has no previous command.
  if (k > 0) {
    frag.add_variable(a_prev, last_command_);
    frag.factors.push_back(
        factors::prior_factor(a_prev, last_command_, NoiseModel::isotropic(2, nt.state_prior)));
  }

  // Warm start: previous plan shifted by one step, poses re-integrated from
  // the current estimate so the guess satisfies the motion model.
  std::vector<Eigen::Vector2d> vel(static_cast<std::size_t>(n), velocity_);
  std::vector<Eigen::Vector2d> acc(static_cast<std::size_t>(n), Eigen::Vector2d::Zero());
  if (plan_velocities_.size() == static_cast<std::size_t>(n)) {
    for (int i = 0; i + 1 < n; ++i) {
      vel[static_cast<std::size_t>(i)] = plan_velocities_[static_cast<std::size_t>(i + 1)];
      acc[static_cast<std::size_t>(i)] = plan_accelerations_[static_cast<std::size_t>(i + 1)];
    }
    vel.back() = plan_velocities_.back();
    acc.back() = Eigen::Vector2d::Zero();
  }
  Pose2 x = lie::planar_part(estimates_.get<Pose3>(xk));
  for (int i = 1; i <= n; ++i) {
    const auto idx = static_cast<std::size_t>(i - 1);
    x = factors::unicycle_step(x, vel[idx], dt);
    frag.add_variable(graph::robot_pose_key(k + i), x);
    frag.add_variable(graph::velocity_key(k + i), vel[idx]);
    frag.add_variable(graph::acceleration_key(k + i - 1), acc[idx]);
  }

  const NoiseModel dyn = NoiseModel::isotropic(5, nt.dynamics);
  const NoiseModel lim = NoiseModel::isotropic(2, nt.limits);
  const NoiseModel cost = NoiseModel::isotropic(2, nt.cost);
  const NoiseModel smooth = NoiseModel::isotropic(2, nt.const_acc);
  const NoiseModel obstacle = NoiseModel::isotropic(1, nt.obstacle);
  const double d_os = config_.robot_radius + config_.safety_offset;
  for (int i = 0; i < n; ++i) {
    const VariableKey x0 = graph::robot_pose_key(k + i);
    const VariableKey x1 = graph::robot_pose_key(k + i + 1);
    const VariableKey v0 = graph::velocity_key(k + i);
    const VariableKey v1 = graph::velocity_key(k + i + 1);
    const VariableKey a = graph::acceleration_key(k + i);
    frag.factors.push_back(factors::motion_model_factor(x0, x1, v0, v1, a, dt, dyn));
    frag.factors.push_back(
        factors::limit_factor(v1, config_.velocity_min, config_.velocity_max, lim));
    frag.factors.push_back(
        factors::limit_factor(a, config_.acceleration_min, config_.acceleration_max, lim));
    frag.factors.push_back(factors::cost_factor(a, cost));
    if (k + i > 0) {
      frag.factors.push_back(
          factors::const_acc_factor(graph::acceleration_key(k + i - 1), a, smooth));
    }
    frag.factors.push_back(factors::static_obstacle_factor(x1, esdf_, d_os, std::nullopt,
                                                           obstacle, Component::Planning));
  }
  frag.factors.push_back(factors::goal_factor(graph::robot_pose_key(k + n), local_goal,
                                              NoiseModel::isotropic(3, nt.goal)));

  for (const auto& [id, t] : tracks_) {
    if (!can_predict(t, k)) continue;
    const factors::ObjectModel model{id, t.com_reference, t.radius};
    const double d_ros = config_.robot_radius + t.radius + config_.safety_offset;
    for (int i = 1; i <= n; ++i) {
      frag.factors.push_back(factors::dynamic_obstacle_factor(
          graph::robot_pose_key(k + i), graph::motion_key(id, k + i), model, d_ros, obstacle,
          factors::ObstacleDirection::ToPlanning));
    }
  }
  return frag;
}

void Pipeline::prune(int k) {
  const int ws = std::max(0, k - config_.lag_window + 1);
  estimation_factors_.erase(estimation_factors_.begin(), estimation_factors_.lower_bound(ws));
  std::vector<VariableKey> stale;
  for (const auto& [key, value] : estimates_) {
    const bool timed = key.kind == VariableKind::RobotPose || key.kind == VariableKind::ObjectMotion;
    if (timed && key.time_step < ws - 3) stale.push_back(key);
  }
  for (const auto& key : stale) {
    estimates_.erase(key);
    identity_motions_.erase(key);
  }
}

StepOutput Pipeline::step(const StepInput& input, const Pose2& local_goal) {
  const int k = k_;
  const int n = config_.horizon;
  GraphFragment est = build_estimation(k, input);
  GraphFragment pred = build_prediction(k);
  GraphFragment plan = build_planning(k, local_goal);

  std::vector<FactorPtr> downstream = std::move(pred.factors);
  downstream.insert(downstream.end(), plan.factors.begin(), plan.factors.end());
  downstream = factors::apply_mode_masks(std::move(downstream), config_.mode, step_components(k));
  pred.factors.clear();
  plan.factors.clear();

  GraphFragment joint = est;
  joint.append(std::move(pred));
  joint.append(std::move(plan));
  joint.factors.insert(joint.factors.end(), downstream.begin(), downstream.end());

  graph::FactorGraph g;
  joint.insert_into(g);
  last_graph_ = g;

  const auto components = step_components(k);
  graph::OptimizeResult result;
  bool failed = false;
  try {
    if (config_.mode.mode == factors::Mode::Decoupled) {
      graph::FactorGraph eg;
      est.insert_into(eg);
      const auto er = eg.optimize(config_.optimizer);
      graph::FactorGraph pg;
      GraphFragment rest = joint;
      rest.factors = downstream;
      for (auto& [key, value] : rest.variables) {
        if (components(key) != Component::Estimation) continue;
        if (er.values.contains(key)) value = er.values.at(key);
        rest.fixed.insert(key);
      }
      rest.insert_into(pg);
      result = pg.optimize(config_.optimizer);
      result.iterations += er.iterations;
      result.diverged = result.diverged || er.diverged;
      result.converged = result.converged && er.converged;
      for (const auto& [key, value] : er.values) result.values.insert_or_assign(key, value);
      result.accepted_errors.insert(result.accepted_errors.begin(), er.accepted_errors.front());
    } else {
      result = g.optimize(config_.optimizer);
    }
  } catch (const std::exception&) {
    failed = true;
    result = graph::OptimizeResult{};
    result.values = g.initial_values();
    result.diverged = true;
  }
  if (!std::isfinite(result.final_error)) result.diverged = true;
  const graph::Values& values = result.values;

  StepOutput out;
  out.step = k;
  out.stats.iterations = result.iterations;
  out.stats.initial_error = result.accepted_errors.empty() ? 0.0 : result.accepted_errors.front();
  out.stats.final_error = result.final_error;
  out.stats.converged = result.converged && !failed;
  out.stats.diverged = result.diverged;
  out.stats.variables = static_cast<int>(g.num_variables());
  out.stats.factors = static_cast<int>(g.factors().size());

  for (const auto& [key, value] : est.variables) {
    if (!est.fixed.contains(key)) estimates_.insert_or_assign(key, values.at(key));
  }

  const int ws = std::max(0, k - config_.lag_window + 1);
  out.trajectory_start = ws;
  for (int j = ws; j <= k; ++j) out.trajectory.push_back(estimates_.get<Pose3>(graph::robot_pose_key(j)));
  out.pose = out.trajectory.back();

  for (const auto& [id, t] : tracks_) {
    const VariableKey h = graph::motion_key(id, k);
    if (!estimates_.contains(h)) continue;
    const Pose3 motion = estimates_.get<Pose3>(h);
    out.objects.push_back({id, t.reference_step, motion, factors::com_pose(motion, t.com_reference)});

    ObjectPrediction p;
    p.object_id = id;
    std::vector<Pose3> motions;
    if (can_predict(t, k)) {
      for (int i = 1; i <= n; ++i) motions.push_back(values.get<Pose3>(graph::motion_key(id, k + i)));
      last_prediction_[id] = motions;
    } else {
      motions.assign(static_cast<std::size_t>(n), motion);
      p.held_static = true;
      last_prediction_.erase(id);
    }
    for (const auto& m : motions) p.com.push_back(factors::com_pose(m, t.com_reference));
    out.predictions.push_back(std::move(p));
  }

  for (int i = 1; i <= n; ++i) {
    out.planned_poses.push_back(values.get<Pose2>(graph::robot_pose_key(k + i)));
    out.planned_velocities.push_back(values.get<Eigen::Vector2d>(graph::velocity_key(k + i)));
    out.planned_accelerations.push_back(
        values.get<Eigen::Vector2d>(graph::acceleration_key(k + i - 1)));
  }
  out.velocity = velocity_;
  if (result.diverged) {
    // Decelerate towards standstill within the acceleration bounds.
    out.braking = true;
    out.command = (-velocity_ / config_.dt)
                      .cwiseMax(config_.acceleration_min)
                      .cwiseMin(config_.acceleration_max);
    plan_poses_.clear();
    plan_velocities_.clear();
    plan_accelerations_.clear();
  } else {
    out.command = out.planned_accelerations.front();
    plan_poses_ = out.planned_poses;
    plan_velocities_ = out.planned_velocities;
    plan_accelerations_ = out.planned_accelerations;
  }

  velocity_ = clamp_velocity(velocity_ + out.command * config_.dt);
  last_command_ = out.command;
  ++k_;
  prune(k_);
  return out;
}

}  // namespace dfg::pipeline
