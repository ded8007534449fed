#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <vector>

#include "dfg/graph/factor.hpp"
#include "dfg/graph/values.hpp"

namespace dfg::graph {

using FactorId = std::size_t;

/// Whitened linearization J delta + r of all factors at one point.
///
/// Columns cover the active (non-fixed) variables in ascending key order.
/// Jacobian blocks of directed keys are structurally absent.
struct LinearSystem {
  Eigen::SparseMatrix<double> jacobian;
  Eigen::VectorXd residual;
  std::vector<VariableKey> ordering;
  std::map<VariableKey, int> column_offset;
  std::map<VariableKey, int> column_dim;

  int total_dim() const { return static_cast<int>(jacobian.cols()); }
  /// J^T J
  Eigen::SparseMatrix<double> information() const;
  Eigen::MatrixXd dense_jacobian() const { return Eigen::MatrixXd(jacobian); }
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-variable tangent update.
using Delta = std::map<VariableKey, Eigen::VectorXd>;

/// Solves (J^T J + lambda diag(J^T J)) delta = -J^T r. Throws
/// SingularSystemError when the damped system is not positive definite.
Eigen::VectorXd solve_normal_equations(const LinearSystem& sys, double lambda);
Delta solve_normal_equations_by_key(const LinearSystem& sys, double lambda);

/// The J^T J block coupling two active variables.
Eigen::MatrixXd cross_block(const LinearSystem& sys, const VariableKey& a,
                            const VariableKey& b);

/// Writes the block sparsity of J^T J: one line per (row, column) block
/// pair with "1" for a structurally nonzero block and "0" otherwise,
/// preceded by a header naming each block.
void write_block_sparsity(std::ostream& os, const LinearSystem& sys);

struct OptimizerConfig {
  int max_iters = 100;
  double lambda_init = 1e-4;
  double lambda_scale = 10.0;
  double lambda_max = 1e7;
  double lambda_min = 1e-12;
  double abs_tol = 1e-8;
  double rel_tol = 1e-10;
};

struct OptimizeResult {
  Values values;
  int iterations = 0;
  double final_error = 0.0;
  bool converged = false;
  bool diverged = false;
  /// Merit value after every accepted step, starting with the initial error.
  std::vector<double> accepted_errors;
};

/// Factor graph container with a Levenberg-Marquardt solver.
class FactorGraph {
 public:
  /// Throws std::invalid_argument on a duplicate key.
  void add_variable(const VariableKey& key, Value initial);
  bool has_variable(const VariableKey& key) const { return initial_.contains(key); }

  /// Throws std::invalid_argument when a key is unknown or the factor's
  /// mask does not match its keys.
  FactorId add_factor(FactorPtr factor);

  /// Treats the variable as a constant. Throws std::invalid_argument for an
  /// unknown key.
  void fix_variable(const VariableKey& key);
  bool is_fixed(const VariableKey& key) const { return fixed_.contains(key); }

  /// Replaces the stored initial value of an existing variable.
  void set_initial(const VariableKey& key, Value value);

  const Values& initial_values() const { return initial_; }
  const std::vector<FactorPtr>& factors() const { return factors_; }
  std::vector<FactorPtr>& mutable_factors() { return factors_; }
  std::size_t num_variables() const { return initial_.size(); }
  std::vector<VariableKey> active_keys() const;
  int total_dim() const;

  /// Throws MissingValueError when `values` lacks a variable of the graph.
  LinearSystem linearize(const Values& values) const;

  /// sum_i ||r_i||^2_Sigma_i
  double total_error(const Values& values) const;

  /// Error with every directed key of every factor read from `reference`
  /// and every other key from `values`. This is the quantity the masked
  /// linear model predicts, used by the LM acceptance test.
  double directed_error(const Values& values, const Values& reference) const;

  /// Applies per-variable updates to the active variables.
  Values retract(const Values& values, const Eigen::VectorXd& delta,
                 const LinearSystem& sys) const;

  OptimizeResult optimize(const Values& values, const OptimizerConfig& config = {}) const;
  OptimizeResult optimize(const OptimizerConfig& config = {}) const {
    return optimize(initial_, config);
  }

  /// Block of (J^T J)^-1 for `key` linearized at `values`. Throws
  /// SingularSystemError when the information matrix is singular.
  Eigen::MatrixXd marginal_covariance(const Values& values, const VariableKey& key) const;

 private:
  Values initial_;
  std::set<VariableKey> fixed_;
  std::vector<FactorPtr> factors_;
};

}  // namespace dfg::graph
