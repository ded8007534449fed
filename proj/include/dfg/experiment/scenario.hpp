#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfg/pipeline/pipeline.hpp"
#include "dfg/sim/sim.hpp"

namespace dfg::experiment {

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  /// 1-based; 0 when no line applies.
  int line() const { return line_; }

 private:
  int line_;
};

enum class ScenarioKind { Navigation, Toy };

struct ScenarioSpec {
  std::string name;
  ScenarioKind kind = ScenarioKind::Navigation;
  std::filesystem::path grid_path;
  std::shared_ptr<const worldmap::OccupancyGrid> grid;
  /// Empty means random landmarks at sensor.landmark_density.
  std::vector<sim::Landmark> landmarks;
  std::vector<sim::AgentSpec> agents;
  lie::Pose2 ego_start;
  std::vector<Eigen::Vector2d> path;
  sim::SensorSpec sensor;
  pipeline::PipelineConfig pipeline;
  std::uint64_t seed = 1;
  int step_budget = 500;
  double goal_radius = 0.3;
};

/// INI-style sections of key = value pairs; see README for the schema.
/// Relative grid paths resolve against `base_dir`. Throws ScenarioError.
ScenarioSpec parse_scenario(std::istream& in, const std::filesystem::path& base_dir);
ScenarioSpec load_scenario(const std::filesystem::path& path);

/// Waypoints resampled every `spacing` metres, each pose heading along its
/// segment.
std::vector<lie::Pose2> densify_path(const std::vector<Eigen::Vector2d>& waypoints,
                                     double spacing = 0.05);

}  // namespace dfg::experiment
