#include "dfg/experiment/scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dfg::experiment {

namespace pt = boost::property_tree;

namespace {

// Source line of every "section.key" (and of every section header), since
// the property tree does not keep them.
std::map<std::string, int> index_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == ';' || line[first] == '#') continue;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      section = line.substr(first + 1, close == std::string::npos ? std::string::npos
                                                                 : close - first - 1);
      lines.emplace(section, n);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(first, eq - first);
    key.erase(key.find_last_not_of(" \t") + 1);
    lines.emplace(section + "." + key, n);
  }
  return lines;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::map<std::string, int> lines)
      : tree_(tree), lines_(std::move(lines)) {}

  int line_of(const std::string& path) const {
    const auto it = lines_.find(path);
    return it == lines_.end() ? 0 : it->second;
  }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ScenarioError(path + ": " + what, line_of(path));
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    // Section names such as "agent.1" contain the path separator.
    const auto sec = tree_.find(section);
    if (sec == tree_.not_found()) return std::nullopt;
    const auto v = sec->second.find(key);
    if (v == sec->second.not_found()) return std::nullopt;
    used_.insert(section + "." + key);
    return v->second.data();
  }

  std::vector<double> numbers(const std::string& section, const std::string& key,
                              const std::string& text) {
    std::istringstream in(text);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(section + "." + key, "not a number: '" + tok + "'");
      }
    }
    return out;
  }

  template <typename T>
  void number(const std::string& section, const std::string& key, T& out) {
    const auto v = raw(section, key);
    if (!v) return;
    const auto xs = numbers(section, key, *v);
    if (xs.size() != 1) fail(section + "." + key, "expected one number");
    if constexpr (std::is_integral_v<T>) {
      if (xs[0] != std::floor(xs[0])) fail(section + "." + key, "expected an integer");
    }
    out = static_cast<T>(xs[0]);
  }

  void vector2(const std::string& section, const std::string& key, Eigen::Vector2d& out) {
    const auto v = raw(section, key);
    if (!v) return;
    const auto xs = numbers(section, key, *v);
    if (xs.size() != 2) fail(section + "." + key, "expected two numbers");
    out = Eigen::Vector2d(xs[0], xs[1]);
  }

  // "x y; x y; ..."
  std::vector<Eigen::Vector2d> points(const std::string& section, const std::string& key) {
    std::vector<Eigen::Vector2d> out;
    const auto v = raw(section, key);
    if (!v) return out;
    std::istringstream in(*v);
    std::string item;
    while (std::getline(in, item, ';')) {
      if (item.find_first_not_of(" \t") == std::string::npos) continue;
      const auto xs = numbers(section, key, item);
      if (xs.size() != 2) fail(section + "." + key, "each point needs two numbers");
      out.emplace_back(xs[0], xs[1]);
    }
    return out;
  }

  void check_all_used() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) fail(section, "key outside a section");
      for (const auto& [key, value] : body) {
        const std::string path = section + "." + key;
        if (!used_.contains(path)) fail(path, "unknown key");
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::map<std::string, int> lines_;
  std::set<std::string> used_;
};

void read_noise(Reader& r, factors::NoiseTable& n) {
  const std::string s = "noise";
  r.number(s, "odometry_translation", n.odometry_translation);
  r.number(s, "odometry_rotation", n.odometry_rotation);
  r.number(s, "point", n.point);
  r.number(s, "smoothing", n.smoothing);
  r.number(s, "dynamics", n.dynamics);
  r.number(s, "limits", n.limits);
  r.number(s, "cost", n.cost);
  r.number(s, "const_acc", n.const_acc);
  r.number(s, "goal", n.goal);
  r.number(s, "obstacle", n.obstacle);
  r.number(s, "prediction_obstacle", n.prediction_obstacle);
  r.number(s, "state_prior", n.state_prior);
  r.number(s, "pose_prior_translation", n.pose_prior_translation);
  r.number(s, "pose_prior_rotation", n.pose_prior_rotation);
  r.number(s, "localization_translation", n.localization_translation);
  r.number(s, "localization_rotation", n.localization_rotation);
}

void read_pipeline(Reader& r, pipeline::PipelineConfig& c) {
  const std::string s = "pipeline";
  r.number(s, "horizon", c.horizon);
  r.number(s, "dt", c.dt);
  r.number(s, "lag_window", c.lag_window);
  r.number(s, "robot_radius", c.robot_radius);
  r.number(s, "safety_offset", c.safety_offset);
  r.vector2(s, "velocity_min", c.velocity_min);
  r.vector2(s, "velocity_max", c.velocity_max);
  r.vector2(s, "acceleration_min", c.acceleration_min);
  r.vector2(s, "acceleration_max", c.acceleration_max);
  r.number(s, "goal_lookahead", c.goal_lookahead);
  r.number(s, "track_timeout", c.track_timeout);
  r.number(s, "max_iterations", c.optimizer.max_iters);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what(), r.line_of(s));
  }
}

void read_sensor(Reader& r, sim::SensorSpec& s) {
  const std::string n = "sensor";
  double fov_deg = s.fov * 180.0 / M_PI;
  r.number(n, "fov_deg", fov_deg);
  s.fov = fov_deg * M_PI / 180.0;
  r.number(n, "max_range", s.max_range);
  r.number(n, "noise_sigma", s.noise_sigma);
  r.number(n, "points_per_object", s.points_per_object);
  r.number(n, "landmark_density", s.landmark_density);
  r.number(n, "odometry_translation_sigma", s.odometry_translation_sigma);
  r.number(n, "odometry_rotation_sigma", s.odometry_rotation_sigma);
  r.number(n, "localization_period", s.localization_period);
  r.number(n, "localization_translation_sigma", s.localization_translation_sigma);
  r.number(n, "localization_rotation_sigma", s.localization_rotation_sigma);
  if (s.noise_sigma < 0.0) r.fail(n + ".noise_sigma", "must be non-negative");
  if (s.points_per_object < 3) r.fail(n + ".points_per_object", "must be at least 3");
}

sim::AgentSpec read_agent(Reader& r, const std::string& section, int id) {
  sim::AgentSpec a;
  a.object_id = id;
  r.number(section, "radius", a.radius);
  if (const auto b = r.raw(section, "behavior")) {
    if (*b == "scripted") {
      a.behavior = sim::AgentBehavior::Scripted;
    } else if (*b == "reactive") {
      a.behavior = sim::AgentBehavior::Reactive;
    } else {
      r.fail(section + ".behavior", "expected 'scripted' or 'reactive'");
    }
  }
  a.waypoints = r.points(section, "waypoints");
  r.number(section, "speed", a.speed);
  r.number(section, "start_step", a.start_step);
  r.number(section, "max_turn_rate", a.max_turn_rate);
  r.number(section, "heading_gain", a.heading_gain);
  r.number(section, "avoid_radius", a.avoid_radius);
  r.number(section, "avoid_gain", a.avoid_gain);
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what(), r.line_of(section));
  }
  return a;
}

}  // namespace

ScenarioSpec parse_scenario(std::istream& in, const std::filesystem::path& base_dir) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  pt::ptree tree;
  try {
    std::istringstream ss(text);
    pt::read_ini(ss, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ScenarioError(e.message(), static_cast<int>(e.line()));
  }
  Reader r(tree, index_lines(text));
  ScenarioSpec spec;

  spec.name = r.raw("scenario", "name").value_or("scenario");
  if (const auto kind = r.raw("scenario", "kind")) {
    if (*kind == "toy") {
      spec.kind = ScenarioKind::Toy;
    } else if (*kind != "navigation") {
      r.fail("scenario.kind", "expected 'navigation' or 'toy'");
    }
  }
  r.number("scenario", "seed", spec.seed);
  r.number("scenario", "steps", spec.step_budget);
  r.number("scenario", "goal_radius", spec.goal_radius);
  if (spec.step_budget < 1) r.fail("scenario.steps", "must be positive");
  const auto grid = r.raw("scenario", "grid");

  if (const auto start = r.raw("ego", "start")) {
    const auto xs = r.numbers("ego", "start", *start);
    if (xs.size() != 3) r.fail("ego.start", "expected x y theta");
    spec.ego_start = lie::Pose2(xs[0], xs[1], xs[2]);
  }
  spec.path = r.points("ego", "path");
  read_sensor(r, spec.sensor);
  read_pipeline(r, spec.pipeline);
  read_noise(r, spec.pipeline.noise);

  if (const auto lms = tree.get_child_optional("landmarks")) {
    for (const auto& [key, value] : *lms) {
      const auto xs = r.numbers("landmarks", key, *r.raw("landmarks", key));
      if (xs.size() != 3) r.fail("landmarks." + key, "expected x y z");
      spec.landmarks.push_back({static_cast<int>(spec.landmarks.size()),
                                Eigen::Vector3d(xs[0], xs[1], xs[2])});
    }
  }
  for (const auto& [section, body] : tree) {
    if (section.rfind("agent.", 0) != 0) continue;
    int id = 0;
    try {
      id = std::stoi(section.substr(6));
    } catch (const std::exception&) {
      r.fail(section, "agent sections are named agent.<id>");
    }
    if (id <= 0) r.fail(section, "agent ids must be positive");
    spec.agents.push_back(read_agent(r, section, id));
  }
  r.check_all_used();

  if (spec.kind == ScenarioKind::Toy) return spec;

  if (!grid) throw ScenarioError("scenario.grid is required", r.line_of("scenario"));
  spec.grid_path = base_dir / *grid;
  try {
    spec.grid = std::make_shared<const worldmap::OccupancyGrid>(worldmap::load_grid(spec.grid_path));
  } catch (const worldmap::GridParseError& e) {
    throw ScenarioError(spec.grid_path.string() + ": " + e.what(), r.line_of("scenario.grid"));
  } catch (const std::exception& e) {
    throw ScenarioError(e.what(), r.line_of("scenario.grid"));
  }
  if (spec.path.empty()) r.fail("ego.path", "a global path is required");

  const auto& g = spec.grid->geometry();
  auto free = [&](const Eigen::Vector2d& p) {
    const Eigen::Vector2d f = (p - g.origin) / g.resolution;
    const int i = static_cast<int>(std::lround(f.x()));
    const int j = static_cast<int>(std::lround(f.y()));
    return g.in_bounds(i, j) && !spec.grid->occupied(i, j);
  };
  if (!free(spec.ego_start.translation())) r.fail("ego.start", "start is not in free space");
  for (const auto& p : spec.path) {
    if (!free(p)) r.fail("ego.path", "waypoint is not in free space");
  }
  return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open " + path.string(), 0);
  return parse_scenario(in, path.parent_path());
}

std::vector<lie::Pose2> densify_path(const std::vector<Eigen::Vector2d>& waypoints,
                                     double spacing) {
  std::vector<lie::Pose2> out;
  if (waypoints.empty()) return out;
  double heading = 0.0;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Eigen::Vector2d a = waypoints[i];
    const Eigen::Vector2d d = waypoints[i + 1] - a;
    const double len = d.norm();
    if (len < 1e-12) continue;
    heading = std::atan2(d.y(), d.x());
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int s = 0; s < n; ++s) {
      const Eigen::Vector2d p = a + d * (static_cast<double>(s) / n);
      out.emplace_back(p.x(), p.y(), heading);
    }
  }
  out.emplace_back(waypoints.back().x(), waypoints.back().y(), heading);
  return out;
}

}  // namespace dfg::experiment
