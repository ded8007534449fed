#include "dfg/experiment/toy.hpp"

#include <algorithm>
#include <cmath>

namespace dfg::experiment {

using factors::Mode;
using graph::Component;
using graph::NoiseModel;
using graph::VariableKey;
using lie::Pose3;

namespace {

constexpr int kStep = 2;  // k

std::shared_ptr<const worldmap::EsdfGrid> toy_map() {
  worldmap::OccupancyGrid grid({140, 100, 0.05, Eigen::Vector2d(-1.0, -2.0)});
  grid.fill_box(Eigen::Vector2d(2.7, -1.0), Eigen::Vector2d(3.6, -0.2));
  return std::make_shared<const worldmap::EsdfGrid>(worldmap::compute_esdf(grid));
}

NoiseModel pose_noise() { return NoiseModel::sigmas({0.1, 0.1, 0.1, 0.05, 0.05, 0.05}); }

double max_tangent_gap(const graph::Values& a, const graph::Values& b,
                       const std::vector<VariableKey>& keys) {
  double gap = 0.0;
  for (const auto& k : keys) gap = std::max(gap, graph::local(a.at(k), b.at(k)).cwiseAbs().maxCoeff());
  return gap;
}

double max_cross(const ToyProblem& p, const graph::Values& at) {
  const auto sys = p.graph.linearize(at);
  double m = 0.0;
  for (const auto& e : p.estimation_keys())
    for (const auto& q : p.planning_keys())
      m = std::max(m, graph::cross_block(sys, e, q).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

ToyProblem build_toy_problem(Mode mode, bool estimation_only) {
  ToyProblem p;
  p.m0 = graph::static_point_key(0, kStep - 1);
  p.x_km1 = graph::robot_pose_key(kStep - 1);
  p.x_k = graph::robot_pose_key(kStep);
  p.x_kp1 = graph::robot_pose_key(kStep + 1);
  p.x_kp2 = graph::robot_pose_key(kStep + 2);
  p.d_os = 0.5;
  p.esdf = toy_map();

  auto& g = p.graph;
  g.add_variable(p.m0, Eigen::Vector3d(2.0, 1.4, 0.0));
  g.add_variable(p.x_km1, Pose3::planar(0.05, -0.03, 0.01));
  g.add_variable(p.x_k, Pose3::planar(0.9, 0.1, 0.0));

  std::vector<graph::FactorPtr> fs;
  fs.push_back(factors::prior_factor(p.x_km1, Pose3::identity(), pose_noise()));
  fs.push_back(factors::odometry_factor(p.x_km1, p.x_k, Pose3::planar(1.0, 0.05, 0.02),
                                        pose_noise()));
  fs.push_back(factors::point_measurement_factor(p.x_km1, p.m0, Eigen::Vector3d(2.1, 1.45, 0.0),
                                                 NoiseModel::isotropic(3, 0.1)));
  fs.push_back(factors::point_measurement_factor(p.x_k, p.m0, Eigen::Vector3d(1.0, 1.5, 0.02),
                                                 NoiseModel::isotropic(3, 0.1)));
  if (!estimation_only) {
    g.add_variable(p.x_kp1, Pose3::planar(2.0, 0.0, 0.0));
    g.add_variable(p.x_kp2, Pose3::planar(3.0, 0.0, 0.0));
    const Pose3 step = Pose3::planar(1.0, 0.0, 0.0);
    fs.push_back(std::make_shared<factors::BetweenFactor>(p.x_k, p.x_kp1, step, pose_noise(),
                                                          Component::Planning));
    fs.push_back(std::make_shared<factors::BetweenFactor>(p.x_kp1, p.x_kp2, step, pose_noise(),
                                                          Component::Planning));
    for (const auto& key : {p.x_kp1, p.x_kp2}) {
      fs.push_back(factors::static_obstacle_factor(key, p.esdf, p.d_os, std::nullopt,
                                                   NoiseModel::isotropic(1, 1e-4),
                                                   Component::Planning));
    }
    const VariableKey xk = p.x_k;
    fs = factors::apply_mode_masks(std::move(fs), {mode, 0.0}, [xk](const VariableKey& key) {
      return key.kind == graph::VariableKind::RobotPose && key.time_step > xk.time_step
                 ? Component::Planning
                 : Component::Estimation;
    });
  }
  for (auto& f : fs) g.add_factor(f);
  return p;
}

ToyReport run_toy() {
  ToyReport report;
  const ToyProblem est = build_toy_problem(Mode::Directed, true);
  const ToyProblem dir = build_toy_problem(Mode::Directed);
  const ToyProblem und = build_toy_problem(Mode::Undirected);

  graph::OptimizerConfig tight;
  tight.abs_tol = 1e-12;
  tight.rel_tol = 1e-16;
  const auto est_r = est.graph.optimize(tight);
  const auto dir_r = dir.graph.optimize(tight);
  const auto und_r = und.graph.optimize(tight);
  report.all_converged = est_r.converged && dir_r.converged && und_r.converged;

  const auto keys = est.estimation_keys();
  report.directed_value_gap = max_tangent_gap(est_r.values, dir_r.values, keys);

  double marginal_gap = 0.0, change = 0.0;
  for (const auto& k : keys) {
    const Eigen::MatrixXd s_est = est.graph.marginal_covariance(est_r.values, k);
    const Eigen::MatrixXd s_dir = dir.graph.marginal_covariance(dir_r.values, k);
    const Eigen::MatrixXd s_und = und.graph.marginal_covariance(und_r.values, k);
    marginal_gap = std::max(marginal_gap, (s_est - s_dir).cwiseAbs().maxCoeff());
    change = std::max(change, (s_est - s_und).norm() / s_est.norm());
  }
  report.directed_marginal_gap = marginal_gap;
  report.undirected_marginal_change = change;

  double margin = std::numeric_limits<double>::infinity();
  for (const auto& k : dir.planning_keys()) {
    const Eigen::Vector2d xy = dir_r.values.get<Pose3>(k).translation().head<2>();
    margin = std::min(margin, dir.esdf->query(xy) - dir.d_os);
  }
  report.directed_clearance_margin = margin;
  report.directed_cross_block = max_cross(dir, dir_r.values);
  report.undirected_cross_block = graph::cross_block(und.graph.linearize(und_r.values), und.x_k,
                                                     und.x_kp1)
                                      .cwiseAbs()
                                      .maxCoeff();
  return report;
}

std::vector<ToyCheck> ToyReport::checks() const {
  return {
      {"solvers converged", all_converged, all_converged ? 1.0 : 0.0, 1.0},
      {"directed estimate equals estimation-only", directed_value_gap <= 1e-9,
       directed_value_gap, 1e-9},
      {"directed marginals equal estimation-only", directed_marginal_gap <= 1e-9,
       directed_marginal_gap, 1e-9},
      {"planned poses clear the obstacle", directed_clearance_margin >= -1e-6,
       directed_clearance_margin, -1e-6},
      {"directed estimation/planning blocks are zero", directed_cross_block == 0.0, directed_cross_block,
       0.0},
      {"undirected X_k/X_k+1 block is nonzero", undirected_cross_block > 0.0,
       undirected_cross_block, 0.0},
      {"undirected marginals change", undirected_marginal_change > 0.01,
       undirected_marginal_change, 0.01},
  };
}

bool ToyReport::passed() const {
  const auto cs = checks();
  return std::all_of(cs.begin(), cs.end(), [](const ToyCheck& c) { return c.passed; });
}

}  // namespace dfg::experiment
