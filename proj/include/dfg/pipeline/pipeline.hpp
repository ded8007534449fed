#pragma once

#include <Eigen/Core>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "dfg/factors/factors.hpp"
#include "dfg/graph/graph.hpp"
#include "dfg/worldmap/esdf.hpp"

namespace dfg::pipeline {

using factors::ModeConfig;
using factors::NoiseTable;
using graph::FactorPtr;
using graph::Value;
using graph::VariableKey;
using lie::Pose2;
using lie::Pose3;

struct PipelineConfig {
  int horizon = 30;  // N
  double dt = 0.1;
  int lag_window = 20;
  ModeConfig mode;
  double robot_radius = 0.2;
  double safety_offset = 0.1;
  Eigen::Vector2d velocity_min{-0.1, -1.0};
  Eigen::Vector2d velocity_max{0.6, 1.0};
  Eigen::Vector2d acceleration_min{-1.0, -2.0};
  Eigen::Vector2d acceleration_max{1.0, 2.0};
  NoiseTable noise;
  double goal_lookahead = 1.5;
  /// Steps an unobserved object keeps being propagated before its track is
  /// dropped.
  int track_timeout = 5;
  graph::OptimizerConfig optimizer;

  /// Throws std::invalid_argument when N < 1, dt <= 0 or a bound is
  /// inverted.
  void validate() const;
};

struct StaticObservation {
  int landmark_id = 0;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // body frame
};

struct DynamicObservation {
  int object_id = 0;
  int point_id = 0;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // body frame
};

/// An object in view. The centre-of-mass pose is only read when a track
/// starts, where it becomes the reference C_e.
struct ObjectDetection {
  int object_id = 0;
  double radius = 0.0;
  Pose3 com;
};

struct StepInput {
  /// X_{k-1}^-1 X_k; absent at step 0.
  std::optional<Pose3> odometry;
  std::vector<StaticObservation> static_points;
  std::vector<DynamicObservation> dynamic_points;
  std::vector<ObjectDetection> detections;
  std::optional<Pose3> global_pose;
};

struct SolverStats {
  int iterations = 0;
  double initial_error = 0.0;
  double final_error = 0.0;
  bool converged = false;
  bool diverged = false;
  int variables = 0;
  int factors = 0;
};

struct ObjectEstimate {
  int object_id = 0;
  int reference_step = 0;
  Pose3 motion;  // H_{e,k}
  Pose3 com;     // H_{e,k} C_e
};

struct ObjectPrediction {
  int object_id = 0;
  /// CoM poses for k+1..k+N.
  std::vector<Pose3> com;
  /// True when the history was too short and the object is held in place.
  bool held_static = false;
};

struct StepOutput {
  int step = 0;
  Pose3 pose;  // X_k
  /// X over the lag window, starting at trajectory_start.
  std::vector<Pose3> trajectory;
  int trajectory_start = 0;
  std::vector<ObjectEstimate> objects;
  std::vector<ObjectPrediction> predictions;
  std::vector<Pose2> planned_poses;               // k+1..k+N
  std::vector<Eigen::Vector2d> planned_velocities;  // k+1..k+N
  std::vector<Eigen::Vector2d> planned_accelerations;  // k..k+N-1
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();  // v_k
  Eigen::Vector2d command = Eigen::Vector2d::Zero();   // a_k
  bool braking = false;
  SolverStats stats;
};

/// Variables and factors contributed by one part of the joint graph.
struct GraphFragment {
  std::vector<std::pair<VariableKey, Value>> variables;
  std::set<VariableKey> fixed;
  std::vector<FactorPtr> factors;

  void add_variable(const VariableKey& key, Value value, bool fix = false);
  void append(GraphFragment other);
  /// Adds every variable and factor to `graph`; variables the graph already
  /// holds are skipped.
  void insert_into(graph::FactorGraph& graph) const;
};

/// Component of a key in the step-k graph: robot poses and velocities up to
/// k, accelerations up to k-1, object motions up to k and all points are
/// estimation; later motions are prediction; later poses, velocities and
/// accelerations are planning.
factors::ComponentOf step_components(int k);

/// Standalone constant-motion prediction of one object: fixed H_{k-1}, H_k,
/// variables H_{k+1..k+N}, smoothing chain and static obstacle factors on
/// every predicted CoM (skipped when `esdf` is null). Initial guesses hold
/// the object at H_k.
struct PredictionProblem {
  graph::FactorGraph graph;
  std::vector<VariableKey> predicted;
};
PredictionProblem build_prediction_problem(int object_id, int k, const Pose3& motion_km1,
                                           const Pose3& motion_k, const Pose3& com_reference,
                                           int horizon, double obstacle_distance,
                                           std::shared_ptr<const worldmap::EsdfGrid> esdf,
                                           const NoiseTable& noise);

/// Farthest path point within `lookahead` arc length of the path point
/// closest to `current` (first one on ties).
Pose2 select_local_goal(const std::vector<Pose2>& path, const Pose2& current, double lookahead);

struct MotionError {
  double rotation_deg = 0.0;
  double translation = 0.0;
};

/// Mean error of E_k = gt_k^-1 est_k over aligned CoM sequences. Throws
/// std::invalid_argument on a length mismatch; empty input gives zeros.
MotionError compute_motion_error(const std::vector<Pose3>& estimated,
                                 const std::vector<Pose3>& ground_truth);

/// Joint estimation, prediction and planning, one step at a time.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::shared_ptr<const worldmap::EsdfGrid> esdf,
           const Pose3& start, const Eigen::Vector2d& start_velocity = Eigen::Vector2d::Zero());

  StepOutput step(const StepInput& input, const Pose2& local_goal);

  const PipelineConfig& config() const { return config_; }
  int next_step() const { return k_; }

  /// Graph and initial values of the most recent step, before solving.
  const graph::FactorGraph& last_graph() const { return last_graph_; }

  /// Records the measurements of step k and returns the estimation part of
  /// the step-k graph over the lag window. Must be called once per step,
  /// before build_prediction and build_planning.
  GraphFragment build_estimation(int k, const StepInput& input);
  GraphFragment build_prediction(int k);
  GraphFragment build_planning(int k, const Pose2& local_goal);

 private:
  struct Track {
    int object_id = 0;
    int reference_step = 0;
    Pose3 com_reference;
    double radius = 0.0;
    int last_seen = 0;
  };

  bool track_alive(const Track& t, int k) const;
  bool can_predict(const Track& t, int k) const;
  Eigen::Vector2d clamp_velocity(const Eigen::Vector2d& v) const;
  void prune(int k);

  PipelineConfig config_;
  std::shared_ptr<const worldmap::EsdfGrid> esdf_;
  Pose3 start_;
  int k_ = 0;

  graph::Values estimates_;
  std::map<int, std::vector<FactorPtr>> estimation_factors_;  // by measurement step
  std::set<VariableKey> identity_motions_;
  std::map<int, int> landmark_anchor_;
  std::map<int, Track> tracks_;
  std::map<int, std::vector<Pose3>> last_prediction_;  // motions k+1..k+N

  Eigen::Vector2d velocity_ = Eigen::Vector2d::Zero();        // v_k
  Eigen::Vector2d last_command_ = Eigen::Vector2d::Zero();    // a_{k-1}
  std::vector<Pose2> plan_poses_;
  std::vector<Eigen::Vector2d> plan_velocities_;
  std::vector<Eigen::Vector2d> plan_accelerations_;

  graph::FactorGraph last_graph_;
};

}  // namespace dfg::pipeline
