#include "dfg/graph/values.hpp"

namespace dfg::graph {

namespace {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace

int tangent_dim(const Value& v) {
  return std::visit(Overloaded{[](const lie::Pose2&) { return 3; },
                               [](const lie::Pose3&) { return 6; },
                               [](const Eigen::Vector2d&) { return 2; },
                               [](const Eigen::Vector3d&) { return 3; }},
                    v);
}

Value retract(const Value& v, const Eigen::Ref<const Eigen::VectorXd>& delta) {
  if (delta.size() != tangent_dim(v)) {
    throw std::invalid_argument("retract: delta has wrong dimension");
  }
  return std::visit(
      Overloaded{
          [&](const lie::Pose2& p) -> Value { return p.retract(lie::Tangent3(delta)); },
          [&](const lie::Pose3& p) -> Value { return p.retract(lie::Tangent6(delta)); },
          [&](const Eigen::Vector2d& x) -> Value { return Eigen::Vector2d(x + delta); },
          [&](const Eigen::Vector3d& x) -> Value { return Eigen::Vector3d(x + delta); }},
      v);
}

Eigen::VectorXd local(const Value& a, const Value& b) {
  if (a.index() != b.index()) {
    throw std::invalid_argument("local: values have different types");
  }
  return std::visit(
      Overloaded{[&](const lie::Pose2& p) -> Eigen::VectorXd {
                   return p.local(std::get<lie::Pose2>(b));
                 },
                 [&](const lie::Pose3& p) -> Eigen::VectorXd {
                   return p.local(std::get<lie::Pose3>(b));
                 },
                 [&](const Eigen::Vector2d& x) -> Eigen::VectorXd {
                   return std::get<Eigen::Vector2d>(b) - x;
                 },
                 [&](const Eigen::Vector3d& x) -> Eigen::VectorXd {
                   return std::get<Eigen::Vector3d>(b) - x;
                 }},
      a);
}

void Values::insert(const VariableKey& key, Value value) {
  if (!values_.emplace(key, std::move(value)).second) {
    throw std::invalid_argument("duplicate variable " + to_string(key));
  }
}

const Value& Values::at(const VariableKey& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw MissingValueError(key);
  return it->second;
}

}  // namespace dfg::graph
