#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dfg/experiment/scenario.hpp"
#include "dfg/factors/factors.hpp"

namespace dfg::experiment {

/// "%.10g"; the fixed formatting keeps logs byte-identical across runs.
std::string format_number(double v);

/// Per-step CSV table.
class StepLog {
 public:
  explicit StepLog(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  /// Throws std::invalid_argument when the row width differs from the header.
  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  std::string csv() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct RunOptions {
  factors::Mode mode = factors::Mode::Directed;
  double cooperation_weight = 0.0;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::optional<double> dt;
  std::optional<int> step_budget;
  /// Stop right after the pipeline step with this index (used for graph
  /// dumps); negative runs to completion.
  int stop_after_step = -1;
};

struct RunReport {
  std::string scenario;
  factors::Mode mode = factors::Mode::Directed;
  double cooperation_weight = 0.0;
  std::uint64_t seed = 0;
  bool success = false;
  bool goal_reached = false;
  bool collided = false;
  bool diverged = false;
  int steps = 0;
  /// Absent when no object motion was ever estimated.
  std::optional<double> me_r_deg;
  std::optional<double> me_t;
  double min_clearance = 0.0;
  /// Mean distance of the agents' executed positions from where they would
  /// be at the same step without the ego; absent without agents.
  std::optional<double> agent_path_deviation;
  std::filesystem::path log_path;
};

struct RunResult {
  RunReport report;
  StepLog log{{}};
  /// Graph of the last executed step, before solving.
  graph::FactorGraph last_graph;
};

/// Closed loop: sense, plan, execute until the goal is reached, a collision
/// occurs, the solver diverges or the step budget runs out.
RunResult run_closed_loop(const ScenarioSpec& scenario, const RunOptions& options);

/// Stem shared by a run's files, e.g. "crossing_directed_s3".
std::string run_stem(const RunReport& report);

std::string report_json(const RunReport& report);

/// Writes <stem>.csv and <stem>.json into `out_dir` (each via a temporary
/// file and rename) and sets report.log_path.
void write_run(RunResult& result, const std::filesystem::path& out_dir);

struct SweepOptions {
  std::vector<factors::Mode> modes;
  std::vector<std::uint64_t> seeds;
  /// Applied to Cooperative runs; other modes ignore it.
  std::vector<double> cooperation_weights;
  std::optional<int> horizon;
  std::optional<double> dt;
  std::optional<int> step_budget;
};

/// One run per mode x seed (x weight for Cooperative when weights are
/// given). Throws std::invalid_argument without modes or seeds.
std::vector<RunReport> sweep(const ScenarioSpec& scenario, const SweepOptions& options,
                             const std::optional<std::filesystem::path>& out_dir);

/// CSV with one row per report.
std::string sweep_csv(const std::vector<RunReport>& reports);
/// Aligned text table in the layout of the results table.
std::string sweep_table(const std::vector<RunReport>& reports);

}  // namespace dfg::experiment
