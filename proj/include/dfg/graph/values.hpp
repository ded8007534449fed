#pragma once

#include <Eigen/Core>
#include <map>
#include <stdexcept>
#include <variant>

#include "dfg/graph/key.hpp"
#include "dfg/lie/pose2.hpp"
#include "dfg/lie/pose3.hpp"

namespace dfg::graph {

/// A variable's value: SE(2)/SE(3) element or a plain vector
/// (velocities and accelerations are 2-vectors, points 3-vectors).
using Value = std::variant<lie::Pose2, lie::Pose3, Eigen::Vector2d, Eigen::Vector3d>;

/// Tangent dimension of a value.
int tangent_dim(const Value& v);

/// Group values retract on the right (x * exp(d)); vectors add.
Value retract(const Value& v, const Eigen::Ref<const Eigen::VectorXd>& delta);

/// Inverse of retract: local(a, retract(a, d)) == d.
Eigen::VectorXd local(const Value& a, const Value& b);

class MissingValueError : public std::out_of_range {
 public:
  explicit MissingValueError(const VariableKey& key)
      : std::out_of_range("no value for variable " + to_string(key)) {}
};

/// Keyed store of variable values (the estimate theta).
class Values {
 public:
  using Map = std::map<VariableKey, Value>;

  bool contains(const VariableKey& key) const { return values_.contains(key); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  /// Throws std::invalid_argument when the key already exists.
  void insert(const VariableKey& key, Value value);
  /// Inserts or replaces.
  void insert_or_assign(const VariableKey& key, Value value) {
    values_.insert_or_assign(key, std::move(value));
  }
  void erase(const VariableKey& key) { values_.erase(key); }

  const Value& at(const VariableKey& key) const;

  template <typename T>
  const T& get(const VariableKey& key) const {
    const auto* v = std::get_if<T>(&at(key));
    if (v == nullptr) {
      throw std::invalid_argument("value of " + to_string(key) + " has a different type");
    }
    return *v;
  }

  Map::const_iterator begin() const { return values_.begin(); }
  Map::const_iterator end() const { return values_.end(); }

 private:
  Map values_;
};

}  // namespace dfg::graph
