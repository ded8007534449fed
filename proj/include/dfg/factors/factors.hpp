#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "dfg/graph/factor.hpp"
#include "dfg/lie/pose2.hpp"
#include "dfg/lie/pose3.hpp"
#include "dfg/worldmap/esdf.hpp"

namespace dfg::factors {

using graph::Component;
using graph::Factor;
using graph::FactorPtr;
using graph::NoiseModel;
using graph::Value;
using graph::VariableKey;
using lie::Pose2;
using lie::Pose3;

/// A tracked object, modelled as a sphere whose centre-of-mass pose at the
/// reference step is known.
struct ObjectModel {
  int object_id = 0;
  Pose3 com_at_reference;
  double radius = 0.0;
};

/// C_k = H_{e,k} * C_e
Pose3 com_pose(const Pose3& motion, const Pose3& com_at_reference);

/// Prior on any variable type: r = value (-) prior (log map for poses).
class PriorFactor final : public Factor {
 public:
  PriorFactor(const VariableKey& key, Value prior, NoiseModel noise,
              Component component = Component::Estimation);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<PriorFactor>(*this); }

 private:
  Value prior_;
};

/// Relative pose between two poses of the same type:
/// r = log(measured^-1 * a^-1 * b).
class BetweenFactor final : public Factor {
 public:
  BetweenFactor(const VariableKey& a, const VariableKey& b, Value measured, NoiseModel noise,
                Component component = Component::Estimation);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<BetweenFactor>(*this); }

 private:
  Value measured_;
};

/// Body-frame observation of a world point: r = X^-1 * m - z.
class PointMeasurementFactor final : public Factor {
 public:
  PointMeasurementFactor(const VariableKey& pose, const VariableKey& point,
                         const Eigen::Vector3d& measured, NoiseModel noise);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<PointMeasurementFactor>(*this); }

 private:
  Eigen::Vector3d measured_;
};

/// Observation of a dynamic point through the object motion:
/// r = X_k^-1 * (H_{e,k} * m_e) - z_k, m_e being the point's world position
/// at the object's reference step e.
class HybridMotionFactor final : public Factor {
 public:
  HybridMotionFactor(const VariableKey& pose, const VariableKey& motion,
                     const VariableKey& point, const Eigen::Vector3d& measured,
                     NoiseModel noise);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<HybridMotionFactor>(*this); }

 private:
  Eigen::Vector3d measured_;
};

/// Constant-motion smoothing of three consecutive object motions:
/// r = log[(C_{k-2}^-1 C_{k-1})^-1 (C_{k-1}^-1 C_k)] with C_i = H_i C_e.
class ObjectSmoothingFactor final : public Factor {
 public:
  ObjectSmoothingFactor(const VariableKey& motion_km2, const VariableKey& motion_km1,
                        const VariableKey& motion_k, const Pose3& com_at_reference,
                        NoiseModel noise, Component component = Component::Estimation);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<ObjectSmoothingFactor>(*this); }

 private:
  Pose3 com_;
  lie::Matrix6 ad_com_inv_;
};

/// Unicycle propagation with midpoint heading,
/// f(x, v) = x * (v dt cos(w dt/2), v dt sin(w dt/2), w dt).
Pose2 unicycle_step(const Pose2& x, const Eigen::Vector2d& v, double dt);

/// Motion model: r = [log(x_{k+1}^-1 f(x_k, v_{k+1})); v_{k+1} - (v_k + a_k dt)].
/// Poses may be Pose2 or Pose3 (planar part used).
class MotionModelFactor final : public Factor {
 public:
  MotionModelFactor(const VariableKey& pose_k, const VariableKey& pose_k1,
                    const VariableKey& vel_k, const VariableKey& vel_k1,
                    const VariableKey& acc_k, double dt, NoiseModel noise);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<MotionModelFactor>(*this); }
  double dt() const { return dt_; }

 private:
  double dt_;
};

/// Per-component hinge: max(0, v - upper) + max(0, lower - v).
class LimitFactor final : public Factor {
 public:
  LimitFactor(const VariableKey& key, const Eigen::Vector2d& lower,
              const Eigen::Vector2d& upper, NoiseModel noise);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<LimitFactor>(*this); }

 private:
  Eigen::Vector2d lower_;
  Eigen::Vector2d upper_;
};

/// r = a_k
class CostFactor final : public Factor {
 public:
  CostFactor(const VariableKey& acc, NoiseModel noise);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<CostFactor>(*this); }
};

/// r = a_k - a_{k-1}
class ConstAccFactor final : public Factor {
 public:
  ConstAccFactor(const VariableKey& acc_km1, const VariableKey& acc_k, NoiseModel noise);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<ConstAccFactor>(*this); }
};

/// r = log(goal^-1 x) in SE(2); x may be Pose2 or Pose3.
class GoalFactor final : public Factor {
 public:
  GoalFactor(const VariableKey& pose, const Pose2& goal, NoiseModel noise);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<GoalFactor>(*this); }
  const Pose2& goal() const { return goal_; }

 private:
  Pose2 goal_;
};

/// r = d_os - esdf(p) while esdf(p) < d_os, else 0. p is the planar
/// translation of a robot pose, or of the CoM H * C_e for a motion key.
/// Positions outside the map read distance 0.
class StaticObstacleFactor final : public Factor {
 public:
  StaticObstacleFactor(const VariableKey& key, std::shared_ptr<const worldmap::EsdfGrid> esdf,
                       double d_os, std::optional<ObjectModel> object, NoiseModel noise,
                       Component component);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<StaticObstacleFactor>(*this); }

 private:
  std::shared_ptr<const worldmap::EsdfGrid> esdf_;
  double d_os_;
  std::optional<ObjectModel> object_;
};

enum class ObstacleDirection {
  ToPlanning,    ///< plan reacts to the prediction; motion key directed
  ToPrediction,  ///< prediction reacts to the plan; pose key directed
};

/// eps = d_ros - |p_robot - p_com| (planar); r = eps while eps > 0, else 0.
class DynamicObstacleFactor final : public Factor {
 public:
  DynamicObstacleFactor(const VariableKey& robot_pose, const VariableKey& motion,
                        const ObjectModel& object, double d_ros, NoiseModel noise,
                        ObstacleDirection direction);
  Eigen::VectorXd evaluate(std::span<const Value* const> values,
                           std::span<Eigen::MatrixXd> jacobians) const override;
  FactorPtr clone() const override { return std::make_shared<DynamicObstacleFactor>(*this); }

  ObstacleDirection direction() const { return direction_; }
  const ObjectModel& object() const { return object_; }
  double d_ros() const { return d_ros_; }

  /// Sets the directed mask implied by direction().
  void apply_direction();
  /// Copy with the opposite direction and the whitened residual scaled by
  /// `weight` (> 0).
  std::shared_ptr<DynamicObstacleFactor> reversed(double weight) const;

 private:
  ObjectModel object_;
  double d_ros_;
  ObstacleDirection direction_;
};

// Construction helpers mirroring the factor catalogue.
FactorPtr prior_factor(const VariableKey& key, Value prior, NoiseModel noise,
                       Component component = Component::Estimation);
FactorPtr odometry_factor(const VariableKey& pose_km1, const VariableKey& pose_k,
                          const Pose3& measured_between, NoiseModel noise);
FactorPtr point_measurement_factor(const VariableKey& pose, const VariableKey& point,
                                   const Eigen::Vector3d& z_local, NoiseModel noise);
FactorPtr hybrid_motion_factor(const VariableKey& pose, const VariableKey& motion,
                               const VariableKey& point, const Eigen::Vector3d& z_local,
                               NoiseModel noise);
FactorPtr object_smoothing_factor(const VariableKey& motion_km2, const VariableKey& motion_km1,
                                  const VariableKey& motion_k, const Pose3& com_ref,
                                  NoiseModel noise,
                                  Component component = Component::Estimation);
FactorPtr motion_model_factor(const VariableKey& pose_k, const VariableKey& pose_k1,
                              const VariableKey& vel_k, const VariableKey& vel_k1,
                              const VariableKey& acc_k, double dt, NoiseModel noise);
FactorPtr limit_factor(const VariableKey& key, const Eigen::Vector2d& lower,
                       const Eigen::Vector2d& upper, NoiseModel noise);
FactorPtr cost_factor(const VariableKey& acc, NoiseModel noise);
FactorPtr const_acc_factor(const VariableKey& acc_km1, const VariableKey& acc_k,
                           NoiseModel noise);
FactorPtr goal_factor(const VariableKey& pose, const Pose2& goal, NoiseModel noise);
FactorPtr static_obstacle_factor(const VariableKey& pose_or_motion,
                                 std::shared_ptr<const worldmap::EsdfGrid> esdf, double d_os,
                                 std::optional<ObjectModel> object, NoiseModel noise,
                                 Component component);
FactorPtr dynamic_obstacle_factor(const VariableKey& robot_pose, const VariableKey& motion,
                                  const ObjectModel& object, double d_ros, NoiseModel noise,
                                  ObstacleDirection direction);

/// Standard deviations used when building the joint graph.
struct NoiseTable {
  double odometry_translation = 0.01;  // m
  double odometry_rotation = 0.005;    // rad
  double point = 0.1;                  // m
  double smoothing = 0.05;
  double dynamics = 1e-3;
  double limits = 1e-2;
  double cost = 0.5;
  double const_acc = 0.1;
  double goal = 0.1;
  double obstacle = 0.05;
  double prediction_obstacle = 0.05;   // static obstacles on predicted CoMs
  double state_prior = 1e-3;           // priors on v_k and a_{k-1}
  double pose_prior_translation = 1e-3;
  double pose_prior_rotation = 1e-3;
  double localization_translation = 0.05;
  double localization_rotation = 0.02;
};

enum class Mode { Undirected, Directed, Decoupled, Cooperative };

std::string_view to_string(Mode mode);
/// Accepts the lower-case names; throws std::invalid_argument otherwise.
Mode parse_mode(std::string_view name);

struct ModeConfig {
  Mode mode = Mode::Directed;
  /// Only used by Cooperative; 0 adds no cooperative factors.
  double cooperation_weight = 0.0;
};

/// Component of a variable in the joint graph.
using ComponentOf = std::function<Component(const VariableKey&)>;

/// Sets directed masks according to the mode and returns the factor set,
/// extended with the cooperative factors in Cooperative mode.
///
/// - Undirected: every mask cleared.
/// - Directed: in every factor, keys whose component lies upstream of the
///   factor's most downstream key are directed; dynamic obstacle factors use
///   their own direction.
/// - Cooperative: Directed, plus a reversed copy of every ToPlanning dynamic
///   obstacle factor weighted by the cooperation weight.
/// - Decoupled: no masks except the intrinsic direction of dynamic obstacle
///   factors; the caller solves estimation first and fixes it.
std::vector<FactorPtr> apply_mode_masks(std::vector<FactorPtr> factors, const ModeConfig& mode,
                                        const ComponentOf& component_of);

}  // namespace dfg::factors
