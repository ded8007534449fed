#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dfg/factors/factors.hpp"
#include "dfg/graph/graph.hpp"

namespace dfg::experiment {

/// The five-variable joint graph: landmark m0 seen from X_{k-1} and X_k, a
/// prior and odometry on the estimation side, and a constant-velocity plan
/// X_k -> X_{k+1} -> X_{k+2} that passes a wall.
///
/// Factors, in order:
///   r1 prior(X_{k-1})             r5 point(X_{k-1}, m0)
///   r2 odometry(X_{k-1}, X_k)     r6 point(X_k, m0)
///   r3 const-vel(X_k, X_{k+1})    r7 obstacle(X_{k+1})
///   r4 const-vel(X_{k+1}, X_{k+2}) r8 obstacle(X_{k+2})
struct ToyProblem {
  graph::FactorGraph graph;
  std::shared_ptr<const worldmap::EsdfGrid> esdf;
  double d_os = 0.0;

  graph::VariableKey m0;
  graph::VariableKey x_km1;
  graph::VariableKey x_k;
  graph::VariableKey x_kp1;
  graph::VariableKey x_kp2;

  std::vector<graph::VariableKey> estimation_keys() const { return {m0, x_km1, x_k}; }
  std::vector<graph::VariableKey> planning_keys() const { return {x_kp1, x_kp2}; }
};

/// Undirected and Directed are the meaningful modes. With
/// `estimation_only` the graph holds only m0, X_{k-1}, X_k and r1, r2, r5, r6.
ToyProblem build_toy_problem(factors::Mode mode, bool estimation_only = false);

struct ToyCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct ToyReport {
  /// Largest tangent distance between estimation values of the directed
  /// joint solve and the estimation-only solve.
  double directed_value_gap = 0.0;
  /// Largest entrywise difference between the estimation marginals.
  double directed_marginal_gap = 0.0;
  /// min over planned poses of esdf - d_os.
  double directed_clearance_margin = 0.0;
  /// Largest |J^T J| entry coupling any estimation key to any planning key
  /// in the directed graph.
  double directed_cross_block = 0.0;
  /// Largest |J^T J| entry coupling X_k and X_{k+1} in the undirected graph.
  double undirected_cross_block = 0.0;
  /// Largest relative Frobenius difference of an estimation marginal.
  double undirected_marginal_change = 0.0;
  bool all_converged = false;

  std::vector<ToyCheck> checks() const;
  bool passed() const;
};

ToyReport run_toy();

}  // namespace dfg::experiment
