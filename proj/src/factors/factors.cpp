#include "dfg/factors/factors.hpp"

#include <cmath>
#include <stdexcept>

namespace dfg::factors {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;
using graph::value_as;
using lie::Matrix6;
using lie::Tangent3;
using lie::Tangent6;

namespace {

bool wants(std::span<MatrixXd> jacobians) { return !jacobians.empty(); }

// Planar pose of a Pose2 or Pose3 value, with the Jacobian of the planar
// right perturbation with respect to the value's own tangent.
Pose2 planar_of(const Value* v, MatrixXd* J) {
  if (const auto* p2 = std::get_if<Pose2>(v)) {
    if (J) *J = Matrix3d::Identity();
    return *p2;
  }
  if (const auto* p3 = std::get_if<Pose3>(v)) {
    if (J) *J = lie::planar_part_jacobian(*p3);
    return lie::planar_part(*p3);
  }
  throw std::invalid_argument("expected a Pose2 or Pose3 value");
}

// Planar translation of a robot pose value.
Vector2d position_of(const Value* v, MatrixXd* J) {
  if (const auto* p2 = std::get_if<Pose2>(v)) {
    if (J) {
      *J = MatrixXd::Zero(2, 3);
      J->leftCols(2) = p2->rotation();
    }
    return p2->translation();
  }
  if (const auto* p3 = std::get_if<Pose3>(v)) {
    if (J) {
      *J = MatrixXd::Zero(2, 6);
      J->leftCols(3) = p3->rotation().topRows<2>();
    }
    return p3->translation().head<2>();
  }
  throw std::invalid_argument("expected a Pose2 or Pose3 value");
}

// Planar CoM position of H * C_e, with Jacobian w.r.t. a right
// perturbation of H.
Vector2d com_position_of(const Pose3& motion, const Pose3& com_ref, MatrixXd* J) {
  const Vector3d& tc = com_ref.translation();
  if (J) {
    Eigen::Matrix<double, 3, 6> full;
    full.leftCols<3>() = motion.rotation();
    full.rightCols<3>() = -motion.rotation() * lie::skew(tc);
    *J = full.topRows<2>();
  }
  return motion.transform_from(tc).head<2>();
}

}  // namespace

Pose3 com_pose(const Pose3& motion, const Pose3& com_at_reference) {
  return motion.compose(com_at_reference);
}

// --- PriorFactor -----------------------------------------------------------

PriorFactor::PriorFactor(const VariableKey& key, Value prior, NoiseModel noise,
                         Component component)
    : Factor({key}, std::move(noise), component), prior_(std::move(prior)) {
  if (graph::tangent_dim(prior_) != dim()) {
    throw std::invalid_argument("prior noise dimension does not match value");
  }
}

VectorXd PriorFactor::evaluate(std::span<const Value* const> values,
                               std::span<MatrixXd> jacobians) const {
  const Value& v = *values[0];
  if (v.index() != prior_.index()) throw std::invalid_argument("prior: value type mismatch");
  if (const auto* p = std::get_if<Pose2>(&v)) {
    const Tangent3 r = std::get<Pose2>(prior_).local(*p);
    if (wants(jacobians)) jacobians[0] = lie::se2_right_jacobian_inverse(r);
    return r;
  }
  if (const auto* p = std::get_if<Pose3>(&v)) {
    const Tangent6 r = std::get<Pose3>(prior_).local(*p);
    if (wants(jacobians)) jacobians[0] = lie::se3_right_jacobian_inverse(r);
    return r;
  }
  const VectorXd r = graph::local(prior_, v);
  if (wants(jacobians)) jacobians[0] = MatrixXd::Identity(r.size(), r.size());
  return r;
}

// --- BetweenFactor ---------------------------------------------------------

BetweenFactor::BetweenFactor(const VariableKey& a, const VariableKey& b, Value measured,
                             NoiseModel noise, Component component)
    : Factor({a, b}, std::move(noise), component), measured_(std::move(measured)) {
  if (!std::holds_alternative<Pose2>(measured_) && !std::holds_alternative<Pose3>(measured_)) {
    throw std::invalid_argument("between factor needs a pose measurement");
  }
  if (graph::tangent_dim(measured_) != dim()) {
    throw std::invalid_argument("between noise dimension does not match measurement");
  }
}

VectorXd BetweenFactor::evaluate(std::span<const Value* const> values,
                                 std::span<MatrixXd> jacobians) const {
  if (const auto* m = std::get_if<Pose3>(&measured_)) {
    const auto& a = value_as<Pose3>(values[0]);
    const auto& b = value_as<Pose3>(values[1]);
    const Pose3 E = m->inverse() * a.between(b);
    const Tangent6 r = lie::se3_log(E);
    if (wants(jacobians)) {
      const Matrix6 Jinv = lie::se3_right_jacobian_inverse(r);
      jacobians[0] = -Jinv * b.between(a).adjoint();
      jacobians[1] = Jinv;
    }
    return r;
  }
  const auto& m = std::get<Pose2>(measured_);
  const auto& a = value_as<Pose2>(values[0]);
  const auto& b = value_as<Pose2>(values[1]);
  const Pose2 E = m.inverse() * a.between(b);
  const Tangent3 r = lie::se2_log(E);
  if (wants(jacobians)) {
    const Matrix3d Jinv = lie::se2_right_jacobian_inverse(r);
    jacobians[0] = -Jinv * b.between(a).adjoint();
    jacobians[1] = Jinv;
  }
  return r;
}

// --- PointMeasurementFactor ------------------------------------------------

PointMeasurementFactor::PointMeasurementFactor(const VariableKey& pose,
                                               const VariableKey& point,
                                               const Vector3d& measured, NoiseModel noise)
    : Factor({pose, point}, std::move(noise), Component::Estimation), measured_(measured) {}

VectorXd PointMeasurementFactor::evaluate(std::span<const Value* const> values,
                                          std::span<MatrixXd> jacobians) const {
  const auto& X = value_as<Pose3>(values[0]);
  const auto& m = value_as<Vector3d>(values[1]);
  const Vector3d p = X.transform_to(m);
  if (wants(jacobians)) {
    jacobians[0] = MatrixXd(3, 6);
    jacobians[0].leftCols(3) = -Matrix3d::Identity();
    jacobians[0].rightCols(3) = lie::skew(p);
    jacobians[1] = X.rotation().transpose();
  }
  return p - measured_;
}

// --- HybridMotionFactor ----------------------------------------------------

HybridMotionFactor::HybridMotionFactor(const VariableKey& pose, const VariableKey& motion,
                                       const VariableKey& point, const Vector3d& measured,
                                       NoiseModel noise)
    : Factor({pose, motion, point}, std::move(noise), Component::Estimation),
      measured_(measured) {}

VectorXd HybridMotionFactor::evaluate(std::span<const Value* const> values,
                                      std::span<MatrixXd> jacobians) const {
  const auto& X = value_as<Pose3>(values[0]);
  const auto& H = value_as<Pose3>(values[1]);
  const auto& m = value_as<Vector3d>(values[2]);
  const Vector3d q = H.transform_from(m);
  const Vector3d p = X.transform_to(q);
  if (wants(jacobians)) {
    const Matrix3d RxtRh = X.rotation().transpose() * H.rotation();
    jacobians[0] = MatrixXd(3, 6);
    jacobians[0].leftCols(3) = -Matrix3d::Identity();
    jacobians[0].rightCols(3) = lie::skew(p);
    jacobians[1] = MatrixXd(3, 6);
    jacobians[1].leftCols(3) = RxtRh;
    jacobians[1].rightCols(3) = -RxtRh * lie::skew(m);
    jacobians[2] = RxtRh;
  }
  return p - measured_;
}

// --- ObjectSmoothingFactor -------------------------------------------------

ObjectSmoothingFactor::ObjectSmoothingFactor(const VariableKey& motion_km2,
                                             const VariableKey& motion_km1,
                                             const VariableKey& motion_k,
                                             const Pose3& com_at_reference, NoiseModel noise,
                                             Component component)
    : Factor({motion_km2, motion_km1, motion_k}, std::move(noise), component),
      com_(com_at_reference),
      ad_com_inv_(com_at_reference.inverse().adjoint()) {}

VectorXd ObjectSmoothingFactor::evaluate(std::span<const Value* const> values,
                                         std::span<MatrixXd> jacobians) const {
  const Pose3 C0 = com_pose(value_as<Pose3>(values[0]), com_);
  const Pose3 C1 = com_pose(value_as<Pose3>(values[1]), com_);
  const Pose3 C2 = com_pose(value_as<Pose3>(values[2]), com_);
  const Pose3 prev = C0.between(C1);
  const Pose3 next = C1.between(C2);
  const Pose3 E = prev.between(next);
  const Tangent6 r = lie::se3_log(E);
  if (wants(jacobians)) {
    const Matrix6 Jinv = lie::se3_right_jacobian_inverse(r);
    const Matrix6 ad_next_inv = next.inverse().adjoint();
    jacobians[0] = Jinv * ad_next_inv * ad_com_inv_;
    jacobians[1] = Jinv * (-E.inverse().adjoint() - ad_next_inv) * ad_com_inv_;
    jacobians[2] = Jinv * ad_com_inv_;
  }
  return r;
}

// --- MotionModelFactor -----------------------------------------------------

Pose2 unicycle_step(const Pose2& x, const Vector2d& v, double dt) {
  const double half = 0.5 * v.y() * dt;
  const Pose2 delta(v.x() * dt * std::cos(half), v.x() * dt * std::sin(half), v.y() * dt);
  return x * delta;
}

MotionModelFactor::MotionModelFactor(const VariableKey& pose_k, const VariableKey& pose_k1,
                                     const VariableKey& vel_k, const VariableKey& vel_k1,
                                     const VariableKey& acc_k, double dt, NoiseModel noise)
    : Factor({pose_k, pose_k1, vel_k, vel_k1, acc_k}, std::move(noise), Component::Planning),
      dt_(dt) {
  if (dim() != 5) throw std::invalid_argument("motion model noise must be 5-dimensional");
  if (!(dt > 0.0)) throw std::invalid_argument("motion model needs dt > 0");
}

VectorXd MotionModelFactor::evaluate(std::span<const Value* const> values,
                                     std::span<MatrixXd> jacobians) const {
  const bool jac = wants(jacobians);
  MatrixXd P0, P1;
  const Pose2 x0 = planar_of(values[0], jac ? &P0 : nullptr);
  const Pose2 x1 = planar_of(values[1], jac ? &P1 : nullptr);
  const auto& v0 = value_as<Vector2d>(values[2]);
  const auto& v1 = value_as<Vector2d>(values[3]);
  const auto& a0 = value_as<Vector2d>(values[4]);

  const double c = 0.5 * v1.y() * dt_;
  const Pose2 delta(v1.x() * dt_ * std::cos(c), v1.x() * dt_ * std::sin(c), v1.y() * dt_);
  const Pose2 E = x1.between(x0 * delta);
  const Tangent3 r_pose = lie::se2_log(E);

  VectorXd r(5);
  r.head<3>() = r_pose;
  r.tail<2>() = v1 - (v0 + a0 * dt_);

  if (jac) {
    const Matrix3d Jinv = lie::se2_right_jacobian_inverse(r_pose);
    // Right-perturbation derivative of delta w.r.t. (v, w).
    Eigen::Matrix<double, 3, 2> d_delta;
    const Eigen::Matrix2d Rt = delta.rotation().transpose();
    d_delta.block<2, 1>(0, 0) = Rt * Vector2d(dt_ * std::cos(c), dt_ * std::sin(c));
    d_delta.block<2, 1>(0, 1) =
        Rt * Vector2d(-v1.x() * dt_ * std::sin(c) * 0.5 * dt_,
                      v1.x() * dt_ * std::cos(c) * 0.5 * dt_);
    d_delta(2, 0) = 0.0;
    d_delta(2, 1) = dt_;

    jacobians[0] = MatrixXd::Zero(5, P0.cols());
    jacobians[0].topRows(3) = Jinv * delta.inverse().adjoint() * P0;
    jacobians[1] = MatrixXd::Zero(5, P1.cols());
    jacobians[1].topRows(3) = -Jinv * E.inverse().adjoint() * P1;
    jacobians[2] = MatrixXd::Zero(5, 2);
    jacobians[2].bottomRows(2) = -Eigen::Matrix2d::Identity();
    jacobians[3] = MatrixXd::Zero(5, 2);
    jacobians[3].topRows(3) = Jinv * d_delta;
    jacobians[3].bottomRows(2) = Eigen::Matrix2d::Identity();
    jacobians[4] = MatrixXd::Zero(5, 2);
    jacobians[4].bottomRows(2) = -dt_ * Eigen::Matrix2d::Identity();
  }
  return r;
}

// --- Limit / cost / constant-acceleration ----------------------------------

LimitFactor::LimitFactor(const VariableKey& key, const Vector2d& lower, const Vector2d& upper,
                         NoiseModel noise)
    : Factor({key}, std::move(noise), Component::Planning), lower_(lower), upper_(upper) {
  if (!(lower_.array() < upper_.array()).all()) {
    throw std::invalid_argument("limit factor needs lower < upper");
  }
}

VectorXd LimitFactor::evaluate(std::span<const Value* const> values,
                               std::span<MatrixXd> jacobians) const {
  const auto& v = value_as<Vector2d>(values[0]);
  Vector2d r = Vector2d::Zero();
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 2; ++i) {
    if (v(i) > upper_(i)) {
      r(i) = v(i) - upper_(i);
      J(i, i) = 1.0;
    } else if (v(i) < lower_(i)) {
      r(i) = lower_(i) - v(i);
      J(i, i) = -1.0;
    }
  }
  if (wants(jacobians)) jacobians[0] = J;
  return r;
}

CostFactor::CostFactor(const VariableKey& acc, NoiseModel noise)
    : Factor({acc}, std::move(noise), Component::Planning) {}

VectorXd CostFactor::evaluate(std::span<const Value* const> values,
                              std::span<MatrixXd> jacobians) const {
  if (wants(jacobians)) jacobians[0] = Eigen::Matrix2d::Identity();
  return value_as<Vector2d>(values[0]);
}

ConstAccFactor::ConstAccFactor(const VariableKey& acc_km1, const VariableKey& acc_k,
                               NoiseModel noise)
    : Factor({acc_km1, acc_k}, std::move(noise), Component::Planning) {}

VectorXd ConstAccFactor::evaluate(std::span<const Value* const> values,
                                  std::span<MatrixXd> jacobians) const {
  if (wants(jacobians)) {
    jacobians[0] = -Eigen::Matrix2d::Identity();
    jacobians[1] = Eigen::Matrix2d::Identity();
  }
  return value_as<Vector2d>(values[1]) - value_as<Vector2d>(values[0]);
}

// --- GoalFactor ------------------------------------------------------------

GoalFactor::GoalFactor(const VariableKey& pose, const Pose2& goal, NoiseModel noise)
    : Factor({pose}, std::move(noise), Component::Planning), goal_(goal) {}

VectorXd GoalFactor::evaluate(std::span<const Value* const> values,
                              std::span<MatrixXd> jacobians) const {
  const bool jac = wants(jacobians);
  MatrixXd P;
  const Pose2 x = planar_of(values[0], jac ? &P : nullptr);
  const Tangent3 r = goal_.local(x);
  if (jac) jacobians[0] = lie::se2_right_jacobian_inverse(r) * P;
  return r;
}

// --- StaticObstacleFactor --------------------------------------------------

StaticObstacleFactor::StaticObstacleFactor(const VariableKey& key,
                                           std::shared_ptr<const worldmap::EsdfGrid> esdf,
                                           double d_os, std::optional<ObjectModel> object,
                                           NoiseModel noise, Component component)
    : Factor({key}, std::move(noise), component),
      esdf_(std::move(esdf)),
      d_os_(d_os),
      object_(std::move(object)) {
  if (!esdf_) throw std::invalid_argument("static obstacle factor needs an ESDF");
  if (dim() != 1) throw std::invalid_argument("static obstacle noise must be 1-dimensional");
  if (key.kind == graph::VariableKind::ObjectMotion && !object_) {
    throw std::invalid_argument("static obstacle factor on a motion needs an object model");
  }
}

VectorXd StaticObstacleFactor::evaluate(std::span<const Value* const> values,
                                        std::span<MatrixXd> jacobians) const {
  const bool jac = wants(jacobians);
  MatrixXd Jp;
  Vector2d p;
  if (keys()[0].kind == graph::VariableKind::ObjectMotion) {
    p = com_position_of(value_as<Pose3>(values[0]), object_->com_at_reference,
                        jac ? &Jp : nullptr);
  } else {
    p = position_of(values[0], jac ? &Jp : nullptr);
  }
  Vector2d grad;
  const double d = esdf_->query(p, &grad);
  VectorXd r = VectorXd::Zero(1);
  if (d < d_os_) {
    r(0) = d_os_ - d;
    if (jac) jacobians[0] = -grad.transpose() * Jp;
  } else if (jac) {
    jacobians[0] = MatrixXd::Zero(1, Jp.cols());
  }
  return r;
}

// --- DynamicObstacleFactor -------------------------------------------------

DynamicObstacleFactor::DynamicObstacleFactor(const VariableKey& robot_pose,
                                             const VariableKey& motion,
                                             const ObjectModel& object, double d_ros,
                                             NoiseModel noise, ObstacleDirection direction)
    : Factor({robot_pose, motion}, std::move(noise),
             direction == ObstacleDirection::ToPlanning ? Component::Planning
                                                        : Component::Prediction),
      object_(object),
      d_ros_(d_ros),
      direction_(direction) {
  if (dim() != 1) throw std::invalid_argument("dynamic obstacle noise must be 1-dimensional");
  apply_direction();
}

void DynamicObstacleFactor::apply_direction() {
  set_directed(0, direction_ == ObstacleDirection::ToPrediction);
  set_directed(1, direction_ == ObstacleDirection::ToPlanning);
}

std::shared_ptr<DynamicObstacleFactor> DynamicObstacleFactor::reversed(double weight) const {
  const auto dir = direction_ == ObstacleDirection::ToPlanning ? ObstacleDirection::ToPrediction
                                                               : ObstacleDirection::ToPlanning;
  return std::make_shared<DynamicObstacleFactor>(keys()[0], keys()[1], object_, d_ros_,
                                                 noise().scaled(weight), dir);
}

VectorXd DynamicObstacleFactor::evaluate(std::span<const Value* const> values,
                                         std::span<MatrixXd> jacobians) const {
  const bool jac = wants(jacobians);
  MatrixXd Jr, Jc;
  const Vector2d pr = position_of(values[0], jac ? &Jr : nullptr);
  const Vector2d pc = com_position_of(value_as<Pose3>(values[1]), object_.com_at_reference,
                                      jac ? &Jc : nullptr);
  const Vector2d diff = pr - pc;
  const double range = diff.norm();
  const double eps = d_ros_ - range;
  VectorXd r = VectorXd::Zero(1);
  if (jac) {
    jacobians[0] = MatrixXd::Zero(1, Jr.cols());
    jacobians[1] = MatrixXd::Zero(1, Jc.cols());
  }
  if (eps > 0.0) {
    r(0) = eps;
    if (jac && range > 1e-12) {
      const Eigen::RowVector2d u = diff.transpose() / range;
      jacobians[0] = -u * Jr;
      jacobians[1] = u * Jc;
    }
  }
  return r;
}

// --- construction helpers --------------------------------------------------

FactorPtr prior_factor(const VariableKey& key, Value prior, NoiseModel noise,
                       Component component) {
  return std::make_shared<PriorFactor>(key, std::move(prior), std::move(noise), component);
}

FactorPtr odometry_factor(const VariableKey& pose_km1, const VariableKey& pose_k,
                          const Pose3& measured_between, NoiseModel noise) {
  return std::make_shared<BetweenFactor>(pose_km1, pose_k, measured_between, std::move(noise));
}

FactorPtr point_measurement_factor(const VariableKey& pose, const VariableKey& point,
                                   const Vector3d& z_local, NoiseModel noise) {
  return std::make_shared<PointMeasurementFactor>(pose, point, z_local, std::move(noise));
}

FactorPtr hybrid_motion_factor(const VariableKey& pose, const VariableKey& motion,
                               const VariableKey& point, const Vector3d& z_local,
                               NoiseModel noise) {
  return std::make_shared<HybridMotionFactor>(pose, motion, point, z_local, std::move(noise));
}

FactorPtr object_smoothing_factor(const VariableKey& motion_km2, const VariableKey& motion_km1,
                                  const VariableKey& motion_k, const Pose3& com_ref,
                                  NoiseModel noise, Component component) {
  return std::make_shared<ObjectSmoothingFactor>(motion_km2, motion_km1, motion_k, com_ref,
                                                 std::move(noise), component);
}

FactorPtr motion_model_factor(const VariableKey& pose_k, const VariableKey& pose_k1,
                              const VariableKey& vel_k, const VariableKey& vel_k1,
                              const VariableKey& acc_k, double dt, NoiseModel noise) {
  return std::make_shared<MotionModelFactor>(pose_k, pose_k1, vel_k, vel_k1, acc_k, dt,
                                             std::move(noise));
}

FactorPtr limit_factor(const VariableKey& key, const Vector2d& lower, const Vector2d& upper,
                       NoiseModel noise) {
  return std::make_shared<LimitFactor>(key, lower, upper, std::move(noise));
}

FactorPtr cost_factor(const VariableKey& acc, NoiseModel noise) {
  return std::make_shared<CostFactor>(acc, std::move(noise));
}

FactorPtr const_acc_factor(const VariableKey& acc_km1, const VariableKey& acc_k,
                           NoiseModel noise) {
  return std::make_shared<ConstAccFactor>(acc_km1, acc_k, std::move(noise));
}

FactorPtr goal_factor(const VariableKey& pose, const Pose2& goal, NoiseModel noise) {
  return std::make_shared<GoalFactor>(pose, goal, std::move(noise));
}

FactorPtr static_obstacle_factor(const VariableKey& pose_or_motion,
                                 std::shared_ptr<const worldmap::EsdfGrid> esdf, double d_os,
                                 std::optional<ObjectModel> object, NoiseModel noise,
                                 Component component) {
  return std::make_shared<StaticObstacleFactor>(pose_or_motion, std::move(esdf), d_os,
                                                std::move(object), std::move(noise),
                                                component);
}

FactorPtr dynamic_obstacle_factor(const VariableKey& robot_pose, const VariableKey& motion,
                                  const ObjectModel& object, double d_ros, NoiseModel noise,
                                  ObstacleDirection direction) {
  return std::make_shared<DynamicObstacleFactor>(robot_pose, motion, object, d_ros,
                                                 std::move(noise), direction);
}

// --- modes -----------------------------------------------------------------

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Undirected: return "undirected";
    case Mode::Directed: return "directed";
    case Mode::Decoupled: return "decoupled";
    case Mode::Cooperative: return "cooperative";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  if (name == "undirected") return Mode::Undirected;
  if (name == "directed") return Mode::Directed;
  if (name == "decoupled") return Mode::Decoupled;
  if (name == "cooperative") return Mode::Cooperative;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

std::vector<FactorPtr> apply_mode_masks(std::vector<FactorPtr> factors, const ModeConfig& mode,
                                        const ComponentOf& component_of) {
  std::vector<FactorPtr> extra;
  for (auto& f : factors) {
    f->clear_directed();
    auto* obstacle = dynamic_cast<DynamicObstacleFactor*>(f.get());
    switch (mode.mode) {
      case Mode::Undirected:
        break;
      case Mode::Decoupled:
        if (obstacle) obstacle->apply_direction();
        break;
      case Mode::Directed:
      case Mode::Cooperative: {
        if (obstacle) {
          obstacle->apply_direction();
          if (mode.mode == Mode::Cooperative && mode.cooperation_weight > 0.0 &&
              obstacle->direction() == ObstacleDirection::ToPlanning) {
            extra.push_back(obstacle->reversed(mode.cooperation_weight));
          }
          break;
        }
        Component owner = Component::Estimation;
        for (const auto& k : f->keys()) owner = std::max(owner, component_of(k));
        for (std::size_t i = 0; i < f->keys().size(); ++i) {
          if (component_of(f->keys()[i]) < owner) f->set_directed(i, true);
        }
        break;
      }
    }
  }
  factors.insert(factors.end(), extra.begin(), extra.end());
  return factors;
}

}  // namespace dfg::factors
