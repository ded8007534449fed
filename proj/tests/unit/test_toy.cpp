#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "dfg/experiment/toy.hpp"

using namespace dfg;
using experiment::build_toy_problem;
using factors::Mode;

namespace {

// Plain dense Gauss-Newton with finite-difference Jacobians of the stacked
// whitened residual, independent of the library's linearization.
graph::Values dense_gauss_newton(const graph::FactorGraph& g, graph::Values x, int iters) {
  std::vector<graph::VariableKey> keys;
  for (const auto& [k, v] : x) keys.push_back(k);
  auto stack = [&](const graph::Values& vals) {
    std::vector<Eigen::VectorXd> parts;
    int n = 0;
    for (const auto& f : g.factors()) {
      parts.push_back(f->whitened_residual(vals));
      n += static_cast<int>(parts.back().size());
    }
    Eigen::VectorXd r(n);
    int o = 0;
    for (const auto& p : parts) {
      r.segment(o, p.size()) = p;
      o += static_cast<int>(p.size());
    }
    return r;
  };
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd r0 = stack(x);
    std::vector<Eigen::VectorXd> cols;
    for (const auto& k : keys) {
      const int d = graph::tangent_dim(x.at(k));
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e(j) = 1e-6;
        graph::Values p = x, m = x;
        p.insert_or_assign(k, graph::retract(x.at(k), e));
        m.insert_or_assign(k, graph::retract(x.at(k), -e));
        cols.push_back((stack(p) - stack(m)) / 2e-6);
      }
    }
    Eigen::MatrixXd J(r0.size(), static_cast<int>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) J.col(static_cast<int>(c)) = cols[c];
    const Eigen::VectorXd dx = -(J.transpose() * J).ldlt().solve(J.transpose() * r0);
    int o = 0;
    for (const auto& k : keys) {
      const int d = graph::tangent_dim(x.at(k));
      x.insert_or_assign(k, graph::retract(x.at(k), dx.segment(o, d)));
      o += d;
    }
  }
  return x;
}

}  // namespace

TEST(ToyTest, EstimationOnlyMatchesDenseSolver) {
  const auto p = build_toy_problem(Mode::Directed, true);
  const auto lm = p.graph.optimize();
  ASSERT_TRUE(lm.converged);
  const auto gn = dense_gauss_newton(p.graph, p.graph.initial_values(), 15);
  for (const auto& k : p.estimation_keys()) {
    EXPECT_LT(graph::local(lm.values.at(k), gn.at(k)).cwiseAbs().maxCoeff(), 1e-7) << k;
  }
}

TEST(ToyTest, FactorLayout) {
  const auto p = build_toy_problem(Mode::Directed);
  ASSERT_EQ(p.graph.factors().size(), 8u);
  ASSERT_EQ(p.graph.num_variables(), 5u);
  // r3 is the only factor spanning estimation and planning; its X_k is directed.
  int directed = 0;
  for (const auto& f : p.graph.factors())
    for (std::size_t i = 0; i < f->keys().size(); ++i)
      if (f->is_directed(i)) {
        ++directed;
        EXPECT_EQ(f->keys()[i], p.x_k);
      }
  EXPECT_EQ(directed, 1);
  const auto u = build_toy_problem(Mode::Undirected);
  for (const auto& f : u.graph.factors()) EXPECT_FALSE(f->has_directed_keys());
}

TEST(ToyTest, ObstacleIsActiveWithoutAvoidance) {
  // The straight-line plan would violate the clearance, so the planner has
  // something to do.
  const auto p = build_toy_problem(Mode::Directed);
  EXPECT_LT(p.esdf->query(Eigen::Vector2d(3.0, 0.0)), p.d_os);
}

TEST(ToyTest, ReportPasses) {
  const auto report = experiment::run_toy();
  for (const auto& c : report.checks()) {
    EXPECT_TRUE(c.passed) << c.name << " value " << c.value;
  }
}
