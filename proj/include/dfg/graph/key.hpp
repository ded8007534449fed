#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

namespace dfg::graph {

enum class VariableKind : std::uint8_t {
  RobotPose,
  ObjectMotion,
  StaticPoint,
  DynamicPoint,
  Velocity,
  Acceleration,
};

std::string_view to_string(VariableKind kind);

/// Identifies one variable of the graph.
///
/// `object_id` is 0 for ego and static quantities. Points additionally carry
/// `index` (landmark or body-point id); for points `time_step` is the step at
/// which the point is anchored (first observation for static points, the
/// object's reference step for dynamic points).
struct VariableKey {
  VariableKind kind = VariableKind::RobotPose;
  int object_id = 0;
  int time_step = 0;
  int index = 0;

  bool operator==(const VariableKey&) const = default;

  /// Ascending (time_step, kind, object_id, index); this is the column order
  /// of the linear system.
  std::strong_ordering operator<=>(const VariableKey& o) const {
    if (auto c = time_step <=> o.time_step; c != 0) return c;
    if (auto c = kind <=> o.kind; c != 0) return c;
    if (auto c = object_id <=> o.object_id; c != 0) return c;
    return index <=> o.index;
  }
};

inline VariableKey robot_pose_key(int k) { return {VariableKind::RobotPose, 0, k, 0}; }
inline VariableKey velocity_key(int k) { return {VariableKind::Velocity, 0, k, 0}; }
inline VariableKey acceleration_key(int k) { return {VariableKind::Acceleration, 0, k, 0}; }
inline VariableKey motion_key(int object_id, int k) {
  return {VariableKind::ObjectMotion, object_id, k, 0};
}
inline VariableKey static_point_key(int landmark_id, int anchor_step) {
  return {VariableKind::StaticPoint, 0, anchor_step, landmark_id};
}
inline VariableKey dynamic_point_key(int object_id, int point_id, int anchor_step) {
  return {VariableKind::DynamicPoint, object_id, anchor_step, point_id};
}

/// Short label such as "X3", "H1@7", "V4", "m12@0".
std::string to_string(const VariableKey& key);
std::ostream& operator<<(std::ostream& os, const VariableKey& key);

}  // namespace dfg::graph
