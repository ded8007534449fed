#include "dfg/graph/noise.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <stdexcept>

namespace dfg::graph {

NoiseModel NoiseModel::sigmas(const Eigen::VectorXd& sigmas) {
  if (sigmas.size() == 0 || (sigmas.array() <= 0.0).any()) {
    throw std::invalid_argument("noise sigmas must be positive");
  }
  return NoiseModel(sigmas.cwiseInverse().asDiagonal().toDenseMatrix());
}

NoiseModel NoiseModel::sigmas(std::initializer_list<double> s) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(s.size()));
  Eigen::Index i = 0;
  for (double x : s) v(i++) = x;
  return sigmas(v);
}

NoiseModel NoiseModel::isotropic(int dim, double sigma) {
  return sigmas(Eigen::VectorXd::Constant(dim, sigma));
}

NoiseModel NoiseModel::covariance(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0 ||
      !sigma.isApprox(sigma.transpose())) {
    throw std::invalid_argument("covariance must be square and symmetric");
  }
  const Eigen::MatrixXd info = sigma.inverse();
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("covariance must be positive definite");
  }
  // info = U^T U with U upper triangular.
  return NoiseModel(llt.matrixU());
}

Eigen::MatrixXd NoiseModel::covariance_matrix() const {
  const Eigen::MatrixXd info = sqrt_information_.transpose() * sqrt_information_;
  return info.inverse();
}

NoiseModel NoiseModel::scaled(double w) const {
  if (!(w > 0.0)) throw std::invalid_argument("noise scale must be positive");
  return NoiseModel(w * sqrt_information_);
}

}  // namespace dfg::graph
