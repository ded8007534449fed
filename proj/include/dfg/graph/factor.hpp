#pragma once

#include <Eigen/Core>
#include <memory>
#include <span>
#include <vector>

#include "dfg/graph/key.hpp"
#include "dfg/graph/noise.hpp"
#include "dfg/graph/values.hpp"

namespace dfg::graph {

/// Which part of the joint problem a factor or variable belongs to.
/// Ordered upstream to downstream.
enum class Component : std::uint8_t { Estimation = 0, Prediction = 1, Planning = 2 };

/// A residual over a fixed list of variables, weighted by a noise model.
///
/// Each key carries a directed flag. A directed (masked) key still feeds its
/// current value into the residual, but its Jacobian block is zeroed at
/// linearization time, so the factor exerts no pull on that variable.
class Factor {
 public:
  Factor(std::vector<VariableKey> keys, NoiseModel noise, Component component);
  virtual ~Factor() = default;

  Factor(const Factor&) = default;
  Factor& operator=(const Factor&) = default;

  const std::vector<VariableKey>& keys() const { return keys_; }
  const NoiseModel& noise() const { return noise_; }
  int dim() const { return noise_.dim(); }
  Component component() const { return component_; }

  const std::vector<bool>& directed_mask() const { return mask_; }
  bool is_directed(std::size_t i) const { return mask_[i]; }
  bool has_directed_keys() const;
  void set_directed(std::size_t i, bool directed) { mask_.at(i) = directed; }
  void clear_directed();

  /// Raw (unwhitened) residual. `values[i]` is the value of keys()[i]. When
  /// `jacobians` is non-empty it has one entry per key and each is resized
  /// to dim() x tangent_dim(values[i]).
  virtual Eigen::VectorXd evaluate(std::span<const Value* const> values,
                                   std::span<Eigen::MatrixXd> jacobians) const = 0;

  virtual std::shared_ptr<Factor> clone() const = 0;

  Eigen::VectorXd residual(const Values& values) const;
  Eigen::VectorXd whitened_residual(const Values& values) const;
  /// ||r||^2_Sigma
  double error(const Values& values) const;

 protected:
  void set_noise(NoiseModel noise) { noise_ = std::move(noise); }

 private:
  std::vector<VariableKey> keys_;
  NoiseModel noise_;
  Component component_;
  std::vector<bool> mask_;
};

using FactorPtr = std::shared_ptr<Factor>;

/// Helper for concrete factors: typed access to an evaluate() argument.
template <typename T>
const T& value_as(const Value* v) {
  return std::get<T>(*v);
}

}  // namespace dfg::graph
