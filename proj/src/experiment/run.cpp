#include "dfg/experiment/run.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "dfg/pipeline/pipeline.hpp"
#include "dfg/sim/sim.hpp"

namespace dfg::experiment {

namespace {

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> log_columns(const ScenarioSpec& s, int horizon) {
  std::vector<std::string> c = {"step",  "gt_x",    "gt_y",      "gt_theta", "est_x",
                                "est_y", "est_theta", "v",       "omega",    "cmd_a",
                                "cmd_alpha", "clearance", "braking", "iterations"};
  for (const auto& a : s.agents) {
    const std::string o = "o" + std::to_string(a.object_id) + "_";
    for (const char* f : {"gt_x", "gt_y", "est_x", "est_y"}) c.push_back(o + f);
    for (int i = 1; i <= horizon; ++i) {
      c.push_back(o + "pred_x" + std::to_string(i));
      c.push_back(o + "pred_y" + std::to_string(i));
    }
  }
  for (int i = 1; i <= horizon; ++i) {
    c.push_back("plan_x" + std::to_string(i));
    c.push_back("plan_y" + std::to_string(i));
    c.push_back("plan_theta" + std::to_string(i));
  }
  return c;
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void StepLog::add_row(std::vector<std::string> row) {
  if (row.size() != columns_.size()) {
    throw std::invalid_argument("step log row has " + std::to_string(row.size()) +
                                " fields, expected " + std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(row));
}

std::string StepLog::csv() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  return out;
}

RunResult run_closed_loop(const ScenarioSpec& scenario, const RunOptions& options) {
  if (scenario.kind != ScenarioKind::Navigation || !scenario.grid) {
    throw std::invalid_argument("run_closed_loop needs a navigation scenario with a grid");
  }
  pipeline::PipelineConfig config = scenario.pipeline;
  config.mode = {options.mode, options.cooperation_weight};
  if (options.horizon) config.horizon = *options.horizon;
  if (options.dt) config.dt = *options.dt;
  config.validate();
  const int budget = options.step_budget.value_or(scenario.step_budget);
  const std::uint64_t seed = options.seed.value_or(scenario.seed);

  sim::World world;
  world.grid = scenario.grid;
  world.agents = scenario.agents;
  world.sensor = scenario.sensor;
  world.dt = config.dt;
  world.velocity_min = config.velocity_min;
  world.velocity_max = config.velocity_max;
  world.robot_radius = config.robot_radius;
  sim::WorldState state = sim::initial_state(world, scenario.ego_start, seed);
  world.landmarks = scenario.landmarks.empty()
                        ? sim::random_landmarks(scenario.grid->geometry(),
                                                scenario.sensor.landmark_density, state.rng)
                        : scenario.landmarks;

  const auto esdf =
      std::make_shared<const worldmap::EsdfGrid>(worldmap::compute_esdf(*scenario.grid));
  pipeline::Pipeline pipe(config, esdf, lie::embed_se3(scenario.ego_start));
  const auto path = densify_path(scenario.path);
  const Eigen::Vector2d goal = scenario.path.back();

  RunResult result;
  RunReport& rep = result.report;
  rep.scenario = scenario.name;
  rep.mode = options.mode;
  rep.cooperation_weight = options.cooperation_weight;
  rep.seed = seed;
  result.log = StepLog(log_columns(scenario, config.horizon));

  std::map<int, std::size_t> agent_index;
  for (std::size_t i = 0; i < world.agents.size(); ++i) agent_index[world.agents[i].object_id] = i;
  std::vector<lie::Pose3> est_com, gt_com;
  double deviation = 0.0;
  int deviation_samples = 0;
  std::vector<std::vector<Eigen::Vector2d>> nominal;
  for (const auto& a : world.agents) {
    nominal.push_back(sim::nominal_trajectory(a, world.dt, budget));
  }
  auto accumulate_deviation = [&] {
    for (std::size_t i = 0; i < world.agents.size(); ++i) {
      deviation += (state.agents[i].pose.translation() - nominal[i][state.step]).norm();
      ++deviation_samples;
    }
  };

  rep.min_clearance = sim::clearance(world, state, *esdf);
  accumulate_deviation();
  lie::Pose2 estimate = scenario.ego_start;
  for (int k = 0; k < budget; ++k) {
    const pipeline::StepInput input = sim::sense(world, state);
    const lie::Pose2 local_goal =
        pipeline::select_local_goal(path, estimate, config.goal_lookahead);
    const pipeline::StepOutput out = pipe.step(input, local_goal);
    estimate = lie::planar_part(out.pose);

    std::vector<std::string> row;
    const auto num = [&row](double v) { row.push_back(format_number(v)); };
    num(k);
    num(state.ego.x());
    num(state.ego.y());
    num(state.ego.theta());
    num(estimate.x());
    num(estimate.y());
    num(estimate.theta());
    num(out.velocity.x());
    num(out.velocity.y());
    num(out.command.x());
    num(out.command.y());
    num(sim::clearance(world, state, *esdf));
    num(out.braking ? 1 : 0);
    num(out.stats.iterations);
    for (std::size_t i = 0; i < world.agents.size(); ++i) {
      const int id = world.agents[i].object_id;
      const lie::Pose3 gt = sim::agent_com(world, state, i);
      num(gt.translation().x());
      num(gt.translation().y());
      const auto obj = std::find_if(out.objects.begin(), out.objects.end(),
                                    [id](const auto& o) { return o.object_id == id; });
      if (obj != out.objects.end()) {
        num(obj->com.translation().x());
        num(obj->com.translation().y());
        if (k > obj->reference_step) {
          est_com.push_back(obj->com);
          gt_com.push_back(gt);
        }
      } else {
        row.insert(row.end(), 2, "");
      }
      const auto pred = std::find_if(out.predictions.begin(), out.predictions.end(),
                                     [id](const auto& p) { return p.object_id == id; });
      for (int j = 0; j < config.horizon; ++j) {
        if (pred != out.predictions.end()) {
          num(pred->com[static_cast<std::size_t>(j)].translation().x());
          num(pred->com[static_cast<std::size_t>(j)].translation().y());
        } else {
          row.insert(row.end(), 2, "");
        }
      }
    }
    for (const auto& p : out.planned_poses) {
      num(p.x());
      num(p.y());
      num(p.theta());
    }
    result.log.add_row(std::move(row));

    rep.steps = k + 1;
    result.last_graph = pipe.last_graph();
    if (out.stats.diverged) {
      rep.diverged = true;
      break;
    }
    if (k == options.stop_after_step) break;

    sim::tick(world, state, out.command);
    accumulate_deviation();
    rep.min_clearance = std::min(rep.min_clearance, sim::clearance(world, state, *esdf));
    if (sim::check_collision(world, state)) {
      rep.collided = true;
      break;
    }
    if ((state.ego.translation() - goal).norm() < scenario.goal_radius) {
      rep.goal_reached = true;
      break;
    }
  }
  rep.success = rep.goal_reached && !rep.collided && !rep.diverged;
  if (!est_com.empty()) {
    const auto me = pipeline::compute_motion_error(est_com, gt_com);
    rep.me_r_deg = me.rotation_deg;
    rep.me_t = me.translation;
  }
  if (deviation_samples > 0) rep.agent_path_deviation = deviation / deviation_samples;
  return result;
}

std::string run_stem(const RunReport& r) {
  std::string stem = r.scenario + "_" + std::string(factors::to_string(r.mode));
  if (r.mode == factors::Mode::Cooperative) stem += "_w" + format_number(r.cooperation_weight);
  return stem + "_s" + std::to_string(r.seed);
}

std::string report_json(const RunReport& r) {
  nlohmann::json j;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  j["scenario"] = r.scenario;
  j["mode"] = std::string(factors::to_string(r.mode));
  j["cooperation_weight"] = r.cooperation_weight;
  j["seed"] = r.seed;
  j["success"] = r.success;
  j["goal_reached"] = r.goal_reached;
  j["collided"] = r.collided;
  j["diverged"] = r.diverged;
  j["steps"] = r.steps;
  j["me_r_deg"] = opt(r.me_r_deg);
  j["me_t"] = opt(r.me_t);
  j["min_clearance"] = r.min_clearance;
  j["agent_path_deviation"] = opt(r.agent_path_deviation);
  j["step_log"] = r.log_path.filename().string();
  return j.dump(2) + "\n";
}

void write_run(RunResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string stem = run_stem(result.report);
  result.report.log_path = out_dir / (stem + ".csv");
  write_atomically(result.report.log_path, result.log.csv());
  write_atomically(out_dir / (stem + ".json"), report_json(result.report));
}

std::vector<RunReport> sweep(const ScenarioSpec& scenario, const SweepOptions& options,
                             const std::optional<std::filesystem::path>& out_dir) {
  if (options.modes.empty() || options.seeds.empty()) {
    throw std::invalid_argument("sweep needs at least one mode and one seed");
  }
  const std::vector<std::optional<double>> weights =
      options.cooperation_weights.empty()
          ? std::vector<std::optional<double>>{std::nullopt}
          : std::vector<std::optional<double>>(options.cooperation_weights.begin(),
                                               options.cooperation_weights.end());
  // Modes that ignore the weight are run once per seed and repeated per row.
  std::map<std::pair<int, std::uint64_t>, RunReport> cache;
  std::vector<RunReport> reports;
  for (const auto mode : options.modes) {
    for (const auto seed : options.seeds) {
      for (const auto& w : weights) {
        const bool weighted = mode == factors::Mode::Cooperative;
        const auto key = std::make_pair(static_cast<int>(mode), seed);
        if (!weighted) {
          if (auto it = cache.find(key); it != cache.end()) {
            reports.push_back(it->second);
            continue;
          }
        }
        RunOptions ro;
        ro.mode = mode;
        ro.cooperation_weight = weighted ? w.value_or(0.0) : 0.0;
        ro.seed = seed;
        ro.horizon = options.horizon;
        ro.dt = options.dt;
        ro.step_budget = options.step_budget;
        RunResult r = run_closed_loop(scenario, ro);
        if (out_dir) write_run(r, *out_dir);
        if (!weighted) cache.emplace(key, r.report);
        reports.push_back(r.report);
      }
    }
  }
  return reports;
}

std::string sweep_csv(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  os << "scenario,mode,cooperation_weight,seed,success,steps,me_r_deg,me_t,min_clearance,"
        "agent_path_deviation\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : "n/a"; };
  for (const auto& r : reports) {
    os << r.scenario << ',' << factors::to_string(r.mode) << ','
       << format_number(r.cooperation_weight) << ',' << r.seed << ','
       << (r.success ? "true" : "false") << ',' << r.steps << ',' << opt(r.me_r_deg) << ','
       << opt(r.me_t) << ',' << format_number(r.min_clearance) << ','
       << opt(r.agent_path_deviation) << '\n';
  }
  return os.str();
}

std::string sweep_table(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %6s %6s %8s %6s %9s %8s %10s\n", "mode", "weight",
                "seed", "success", "steps", "ME_r[deg]", "ME_t[m]", "clear[m]");
  os << buf;
  for (const auto& r : reports) {
    const std::string mer = r.me_r_deg ? format_number(*r.me_r_deg).substr(0, 9) : "n/a";
    const std::string met = r.me_t ? format_number(*r.me_t).substr(0, 8) : "n/a";
    std::snprintf(buf, sizeof(buf), "%-12s %6.2f %6llu %8s %6d %9s %8s %10.3f\n",
                  std::string(factors::to_string(r.mode)).c_str(), r.cooperation_weight,
                  static_cast<unsigned long long>(r.seed), r.success ? "yes" : "no", r.steps,
                  mer.c_str(), met.c_str(), r.min_clearance);
    os << buf;
  }
  return os.str();
}

}  // namespace dfg::experiment
