#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dfg/experiment/run.hpp"
#include "dfg/experiment/scenario.hpp"
#include "dfg/experiment/toy.hpp"

namespace fs = std::filesystem;
using namespace dfg;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;

std::vector<factors::Mode> parse_modes(const std::vector<std::string>& names) {
  std::vector<factors::Mode> out;
  for (const auto& n : names) out.push_back(factors::parse_mode(n));
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

int cmd_run(const fs::path& scenario_path, const std::string& mode, std::uint64_t seed,
            bool seed_set, std::optional<int> horizon, std::optional<double> dt,
            std::optional<int> steps, double weight, const fs::path& out) {
  const auto scenario = experiment::load_scenario(scenario_path);
  experiment::RunOptions ro;
  ro.mode = factors::parse_mode(mode);
  ro.cooperation_weight = weight;
  if (seed_set) ro.seed = seed;
  ro.horizon = horizon;
  ro.dt = dt;
  ro.step_budget = steps;
  auto result = experiment::run_closed_loop(scenario, ro);
  experiment::write_run(result, out);
  std::cout << experiment::sweep_table({result.report});
  std::cout << "log: " << result.report.log_path.string() << "\n";
  return result.report.diverged ? kExitSolver : 0;
}

int cmd_sweep(const fs::path& scenario_path, const std::vector<std::string>& modes,
              const std::vector<std::uint64_t>& seeds, const std::vector<double>& weights,
              std::optional<int> horizon, std::optional<double> dt, std::optional<int> steps,
              const fs::path& out) {
  const auto scenario = experiment::load_scenario(scenario_path);
  experiment::SweepOptions so;
  so.modes = parse_modes(modes);
  so.seeds = seeds;
  so.cooperation_weights = weights;
  so.horizon = horizon;
  so.dt = dt;
  so.step_budget = steps;
  const auto reports = experiment::sweep(scenario, so, out);
  const std::string table = experiment::sweep_table(reports);
  write_file(out / (scenario.name + "_sweep.csv"), experiment::sweep_csv(reports));
  write_file(out / (scenario.name + "_sweep.txt"), table);
  std::cout << table;
  for (const auto& r : reports)
    if (r.diverged) return kExitSolver;
  return 0;
}

int cmd_dump(const fs::path& scenario_path, int step, const std::string& mode, double weight,
             const fs::path& out) {
  const auto scenario = experiment::load_scenario(scenario_path);
  const factors::Mode m = factors::parse_mode(mode);
  graph::FactorGraph g;
  if (scenario.kind == experiment::ScenarioKind::Toy) {
    g = experiment::build_toy_problem(m).graph;
  } else {
    experiment::RunOptions ro;
    ro.mode = m;
    ro.cooperation_weight = weight;
    ro.stop_after_step = step;
    auto result = experiment::run_closed_loop(scenario, ro);
    if (result.report.steps <= step) {
      std::cerr << "run ended after " << result.report.steps << " steps, before step " << step
                << "\n";
      return 1;
    }
    g = result.last_graph;
  }
  std::ostringstream os;
  graph::write_block_sparsity(os, g.linearize(g.initial_values()));
  const fs::path file =
      out / ("sparsity_" + scenario.name + "_" + std::string(factors::to_string(m)) + "_k" +
             std::to_string(step) + ".txt");
  write_file(file, os.str());
  std::cout << file.string() << "\n";
  return 0;
}

int cmd_toy() {
  const auto report = experiment::run_toy();
  for (const auto& c : report.checks()) {
    std::printf("%s  %-46s %.3e (threshold %.1e)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.value, c.threshold);
  }
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed factor graphs for joint estimation, prediction and planning"};
  app.require_subcommand(1);

  fs::path scenario, out = "out";
  std::string mode = "directed";
  std::uint64_t seed = 1;
  std::optional<int> horizon, steps;
  std::optional<double> dt;
  double weight = 0.0;

  auto* run = app.add_subcommand("run", "Run one closed-loop experiment");
  run->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "undirected|directed|decoupled|cooperative");
  auto* seed_opt = run->add_option("--seed", seed, "Random seed (default: the scenario's)");
  run->add_option("--horizon", horizon, "Planning horizon N");
  run->add_option("--dt", dt, "Time step [s]");
  run->add_option("--steps", steps, "Step budget");
  run->add_option("--weight", weight, "Cooperation weight");
  run->add_option("--out", out, "Output directory");

  std::vector<std::string> modes{"undirected", "directed", "decoupled"};
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> weights;
  auto* sw = app.add_subcommand("sweep", "Run every mode x seed (x weight) combination");
  sw->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  sw->add_option("--modes", modes, "Modes")->delimiter(',');
  sw->add_option("--seeds", seeds, "Seeds")->delimiter(',');
  sw->add_option("--weights", weights, "Cooperation weights")->delimiter(',');
  sw->add_option("--horizon", horizon, "Planning horizon N");
  sw->add_option("--dt", dt, "Time step [s]");
  sw->add_option("--steps", steps, "Step budget");
  sw->add_option("--out", out, "Output directory");

  int step = 0;
  auto* dump = app.add_subcommand("dump-sparsity", "Write the J^T J block pattern of one step");
  dump->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  dump->add_option("--step", step, "Step index")->check(CLI::NonNegativeNumber);
  dump->add_option("--mode", mode, "undirected|directed|decoupled|cooperative");
  dump->add_option("--weight", weight, "Cooperation weight");
  dump->add_option("--out", out, "Output directory");

  auto* toy = app.add_subcommand("toy", "Check the five-variable example and print pass/fail");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(scenario, mode, seed, seed_opt->count() > 0, horizon, dt, steps, weight, out);
    }
    if (sw->parsed()) return cmd_sweep(scenario, modes, seeds, weights, horizon, dt, steps, out);
    if (dump->parsed()) return cmd_dump(scenario, step, mode, weight, out);
    if (toy->parsed()) return cmd_toy();
  } catch (const experiment::ScenarioError& e) {
    std::cerr << scenario.string() << ": " << e.what() << "\n";
    return kExitParse;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const graph::SingularSystemError& e) {
    std::cerr << "solver: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
