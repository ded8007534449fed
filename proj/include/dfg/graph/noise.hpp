#pragma once

#include <Eigen/Core>
#include <initializer_list>

namespace dfg::graph {

/// Gaussian weighting of a residual, stored as the upper-triangular square
/// root of the information matrix so that ||r||^2_Sigma = ||W r||^2.
class NoiseModel {
 public:
  /// Diagonal model; every sigma must be > 0.
  static NoiseModel sigmas(const Eigen::VectorXd& sigmas);
  static NoiseModel sigmas(std::initializer_list<double> sigmas);
  static NoiseModel isotropic(int dim, double sigma);
  /// Full covariance; must be symmetric positive definite.
  static NoiseModel covariance(const Eigen::MatrixXd& sigma);

  int dim() const { return static_cast<int>(sqrt_information_.rows()); }
  const Eigen::MatrixXd& sqrt_information() const { return sqrt_information_; }
  Eigen::MatrixXd covariance_matrix() const;

  /// Multiplies the whitened residual by `w` (w > 0).
  NoiseModel scaled(double w) const;

  Eigen::VectorXd whiten(const Eigen::VectorXd& r) const { return sqrt_information_ * r; }
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& J) const { return sqrt_information_ * J; }

 private:
  explicit NoiseModel(Eigen::MatrixXd sqrt_information)
      : sqrt_information_(std::move(sqrt_information)) {}

  Eigen::MatrixXd sqrt_information_;
};

}  // namespace dfg::graph
