#include "dfg/graph/key.hpp"

namespace dfg::graph {

std::string_view to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::RobotPose: return "RobotPose";
    case VariableKind::ObjectMotion: return "ObjectMotion";
    case VariableKind::StaticPoint: return "StaticPoint";
    case VariableKind::DynamicPoint: return "DynamicPoint";
    case VariableKind::Velocity: return "Velocity";
    case VariableKind::Acceleration: return "Acceleration";
  }
  return "?";
}

std::string to_string(const VariableKey& key) {
  const std::string k = std::to_string(key.time_step);
  switch (key.kind) {
    case VariableKind::RobotPose: return "X" + k;
    case VariableKind::Velocity: return "V" + k;
    case VariableKind::Acceleration: return "A" + k;
    case VariableKind::ObjectMotion: return "H" + std::to_string(key.object_id) + "@" + k;
    case VariableKind::StaticPoint: return "m" + std::to_string(key.index) + "@" + k;
    case VariableKind::DynamicPoint:
      return "d" + std::to_string(key.object_id) + "." + std::to_string(key.index) + "@" + k;
  }
  return "?";
}

std::ostream& operator<<(std::ostream& os, const VariableKey& key) {
  return os << to_string(key);
}

}  // namespace dfg::graph
