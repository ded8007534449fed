#include "dfg/graph/graph.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>
#include <optional>

namespace dfg::graph {

namespace {

constexpr double kMinDiagonal = 1e-6;

std::vector<const Value*> gather(const Factor& f, const Values& values) {
  std::vector<const Value*> out;
  out.reserve(f.keys().size());
  for (const auto& k : f.keys()) out.push_back(&values.at(k));
  return out;
}

// J^T J and J^T r of one linearization, reused across damping values.
class NormalEquations {
 public:
  explicit NormalEquations(const LinearSystem& sys)
      : hessian_(sys.information()),
        gradient_(sys.jacobian.transpose() * sys.residual),
        diagonal_(hessian_.diagonal().cwiseMax(kMinDiagonal)) {
    solver_.analyzePattern(hessian_);
  }

  bool solve(double lambda, Eigen::VectorXd& delta) {
    if (hessian_.cols() == 0) {
      delta.resize(0);
      return true;
    }
    Eigen::SparseMatrix<double> damped = hessian_;
    if (lambda > 0.0) {
      for (Eigen::Index i = 0; i < damped.cols(); ++i) {
        damped.coeffRef(i, i) += lambda * diagonal_(i);
      }
    }
    solver_.factorize(damped);
    if (solver_.info() != Eigen::Success) return false;
    delta = solver_.solve(-gradient_);
    return solver_.info() == Eigen::Success && delta.allFinite();
  }

 private:
  Eigen::SparseMatrix<double> hessian_;
  Eigen::VectorXd gradient_;
  Eigen::VectorXd diagonal_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> solver_;
};

}  // namespace

Eigen::SparseMatrix<double> LinearSystem::information() const {
  Eigen::SparseMatrix<double> H = jacobian.transpose() * jacobian;
  H.makeCompressed();
  return H;
}

Eigen::VectorXd solve_normal_equations(const LinearSystem& sys, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("damping must be non-negative");
  NormalEquations ne(sys);
  Eigen::VectorXd delta;
  if (!ne.solve(lambda, delta)) {
    throw SingularSystemError("normal equations are not positive definite");
  }
  return delta;
}

Delta solve_normal_equations_by_key(const LinearSystem& sys, double lambda) {
  const Eigen::VectorXd delta = solve_normal_equations(sys, lambda);
  Delta out;
  for (const auto& key : sys.ordering) {
    out.emplace(key, delta.segment(sys.column_offset.at(key), sys.column_dim.at(key)));
  }
  return out;
}

Eigen::MatrixXd cross_block(const LinearSystem& sys, const VariableKey& a,
                            const VariableKey& b) {
  const int ra = sys.column_offset.at(a);
  const int rb = sys.column_offset.at(b);
  const int da = sys.column_dim.at(a);
  const int db = sys.column_dim.at(b);
  // Only the columns of the two variables are needed.
  const Eigen::SparseMatrix<double> Ja = sys.jacobian.middleCols(ra, da);
  const Eigen::SparseMatrix<double> Jb = sys.jacobian.middleCols(rb, db);
  return Eigen::MatrixXd(Ja.transpose() * Jb);
}

void write_block_sparsity(std::ostream& os, const LinearSystem& sys) {
  const Eigen::SparseMatrix<double> H = sys.information();
  const std::size_t n = sys.ordering.size();
  // Map scalar column -> block index.
  std::vector<int> block_of(static_cast<std::size_t>(H.cols()));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& k = sys.ordering[i];
    const int off = sys.column_offset.at(k);
    for (int c = 0; c < sys.column_dim.at(k); ++c) {
      block_of[static_cast<std::size_t>(off + c)] = static_cast<int>(i);
    }
  }
  std::vector<std::vector<char>> nonzero(n, std::vector<char>(n, 0));
  for (int col = 0; col < H.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, col); it; ++it) {
      if (it.value() != 0.0) {
        nonzero[static_cast<std::size_t>(block_of[static_cast<std::size_t>(it.row())])]
               [static_cast<std::size_t>(block_of[static_cast<std::size_t>(col)])] = 1;
      }
    }
  }
  os << "%%MatrixMarket matrix coordinate integer general\n";
  os << "% block sparsity of J^T J; 1 = nonzero block, 0 = zero block\n";
  for (std::size_t i = 0; i < n; ++i) {
    os << "% block " << (i + 1) << ' ' << to_string(sys.ordering[i]) << ' '
       << sys.column_dim.at(sys.ordering[i]) << '\n';
  }
  os << n << ' ' << n << ' ' << n * n << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      os << (i + 1) << ' ' << (j + 1) << ' ' << static_cast<int>(nonzero[i][j]) << '\n';
    }
  }
}

void FactorGraph::add_variable(const VariableKey& key, Value initial) {
  if (key.time_step < 0) throw std::invalid_argument("negative time step in " + to_string(key));
  initial_.insert(key, std::move(initial));
}

FactorId FactorGraph::add_factor(FactorPtr factor) {
  if (!factor) throw std::invalid_argument("null factor");
  if (factor->directed_mask().size() != factor->keys().size()) {
    throw std::invalid_argument("directed mask length differs from key count");
  }
  for (const auto& k : factor->keys()) {
    if (!initial_.contains(k)) {
      throw std::invalid_argument("factor references unknown variable " + to_string(k));
    }
  }
  factors_.push_back(std::move(factor));
  return factors_.size() - 1;
}

void FactorGraph::fix_variable(const VariableKey& key) {
  if (!initial_.contains(key)) {
    throw std::invalid_argument("cannot fix unknown variable " + to_string(key));
  }
  fixed_.insert(key);
}

void FactorGraph::set_initial(const VariableKey& key, Value value) {
  if (!initial_.contains(key)) throw MissingValueError(key);
  initial_.insert_or_assign(key, std::move(value));
}

std::vector<VariableKey> FactorGraph::active_keys() const {
  std::vector<VariableKey> keys;
  keys.reserve(initial_.size());
  for (const auto& [k, v] : initial_) {
    if (!fixed_.contains(k)) keys.push_back(k);
  }
  return keys;
}

int FactorGraph::total_dim() const {
  int d = 0;
  for (const auto& [k, v] : initial_) {
    if (!fixed_.contains(k)) d += tangent_dim(v);
  }
  return d;
}

LinearSystem FactorGraph::linearize(const Values& values) const {
  LinearSystem sys;
  int cols = 0;
  for (const auto& [k, v] : initial_) {
    if (fixed_.contains(k)) continue;
    const int d = tangent_dim(values.at(k));
    sys.ordering.push_back(k);
    sys.column_offset.emplace(k, cols);
    sys.column_dim.emplace(k, d);
    cols += d;
  }
  int rows = 0;
  for (const auto& f : factors_) rows += f->dim();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(rows) * 12);
  sys.residual.resize(rows);

  int row = 0;
  std::vector<Eigen::MatrixXd> jacobians;
  for (const auto& f : factors_) {
    const auto vals = gather(*f, values);
    jacobians.assign(vals.size(), Eigen::MatrixXd());
    const Eigen::VectorXd r = f->evaluate(vals, jacobians);
    const auto& W = f->noise().sqrt_information();
    sys.residual.segment(row, f->dim()) = W * r;
    for (std::size_t i = 0; i < f->keys().size(); ++i) {
      const auto& key = f->keys()[i];
      if (f->is_directed(i) || fixed_.contains(key)) continue;
      const int off = sys.column_offset.at(key);
      const Eigen::MatrixXd Jw = W * jacobians[i];
      for (Eigen::Index c = 0; c < Jw.cols(); ++c) {
        for (Eigen::Index rr = 0; rr < Jw.rows(); ++rr) {
          if (Jw(rr, c) != 0.0) {
            triplets.emplace_back(row + static_cast<int>(rr), off + static_cast<int>(c),
                                  Jw(rr, c));
          }
        }
      }
    }
    row += f->dim();
  }
  sys.jacobian.resize(rows, cols);
  sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  sys.jacobian.makeCompressed();
  return sys;
}

double FactorGraph::total_error(const Values& values) const {
  double e = 0.0;
  for (const auto& f : factors_) {
    e += f->noise().whiten(f->evaluate(gather(*f, values), {})).squaredNorm();
  }
  return e;
}

double FactorGraph::directed_error(const Values& values, const Values& reference) const {
  double e = 0.0;
  std::vector<const Value*> vals;
  for (const auto& f : factors_) {
    vals.clear();
    for (std::size_t i = 0; i < f->keys().size(); ++i) {
      const auto& k = f->keys()[i];
      vals.push_back(f->is_directed(i) ? &reference.at(k) : &values.at(k));
    }
    e += f->noise().whiten(f->evaluate(vals, {})).squaredNorm();
  }
  return e;
}

Values FactorGraph::retract(const Values& values, const Eigen::VectorXd& delta,
                            const LinearSystem& sys) const {
  Values out = values;
  for (const auto& key : sys.ordering) {
    const int off = sys.column_offset.at(key);
    const int d = sys.column_dim.at(key);
    out.insert_or_assign(key, graph::retract(values.at(key), delta.segment(off, d)));
  }
  return out;
}

OptimizeResult FactorGraph::optimize(const Values& initial, const OptimizerConfig& config) const {
  OptimizeResult result;
  result.values = initial;
  if (factors_.empty()) throw std::invalid_argument("optimize: graph has no factors");

  double error = total_error(result.values);
  result.accepted_errors.push_back(error);
  if (!std::isfinite(error)) {
    result.diverged = true;
    result.final_error = error;
    return result;
  }
  double lambda = config.lambda_init;
  LinearSystem sys = linearize(result.values);
  std::optional<NormalEquations> normal;
  normal.emplace(sys);

  while (result.iterations < config.max_iters) {
    if (error == 0.0) {
      result.converged = true;
      break;
    }
    ++result.iterations;
    Eigen::VectorXd delta;
    bool accepted = false;
    double candidate_error = std::numeric_limits<double>::infinity();
    Values candidate;
    if (normal->solve(lambda, delta)) {
      if (delta.norm() < config.abs_tol) {
        result.converged = true;
        break;
      }
      candidate = retract(result.values, delta, sys);
      try {
        candidate_error = directed_error(candidate, result.values);
      } catch (const std::domain_error&) {
        candidate_error = std::numeric_limits<double>::infinity();
      }
      accepted = std::isfinite(candidate_error) && candidate_error < error;
    }
    if (!accepted) {
      lambda *= config.lambda_scale;
      if (lambda > config.lambda_max) {
        result.diverged = true;
        break;
      }
      continue;
    }
    const double decrease = error - candidate_error;
    result.values = std::move(candidate);
    result.accepted_errors.push_back(candidate_error);
    lambda = std::max(lambda / config.lambda_scale, config.lambda_min);
    // With directed keys the true error at the new point can differ from the
    // merit that was just accepted.
    error = total_error(result.values);
    if (decrease <= config.rel_tol * result.accepted_errors[result.accepted_errors.size() - 2]) {
      result.converged = true;
      break;
    }
    sys = linearize(result.values);
    normal.emplace(sys);
  }
  result.final_error = total_error(result.values);
  return result;
}

Eigen::MatrixXd FactorGraph::marginal_covariance(const Values& values,
                                                 const VariableKey& key) const {
  if (fixed_.contains(key)) {
    throw std::invalid_argument("no marginal for fixed variable " + to_string(key));
  }
  const LinearSystem sys = linearize(values);
  const Eigen::SparseMatrix<double> H = sys.information();
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt(H);
  if (llt.info() != Eigen::Success) {
    throw SingularSystemError("information matrix is singular");
  }
  const int off = sys.column_offset.at(key);
  const int d = sys.column_dim.at(key);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(H.rows(), d);
  rhs.middleRows(off, d).setIdentity();
  const Eigen::MatrixXd cols = llt.solve(rhs);
  if (!cols.allFinite()) throw SingularSystemError("information matrix is singular");
  Eigen::MatrixXd block = cols.middleRows(off, d);
  return 0.5 * (block + block.transpose());
}

}  // namespace dfg::graph
