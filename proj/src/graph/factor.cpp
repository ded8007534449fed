#include "dfg/graph/factor.hpp"

#include <algorithm>

namespace dfg::graph {

Factor::Factor(std::vector<VariableKey> keys, NoiseModel noise, Component component)
    : keys_(std::move(keys)),
      noise_(std::move(noise)),
      component_(component),
      mask_(keys_.size(), false) {}

bool Factor::has_directed_keys() const {
  return std::any_of(mask_.begin(), mask_.end(), [](bool b) { return b; });
}

void Factor::clear_directed() { std::fill(mask_.begin(), mask_.end(), false); }

Eigen::VectorXd Factor::residual(const Values& values) const {
  std::vector<const Value*> v;
  v.reserve(keys_.size());
  for (const auto& k : keys_) v.push_back(&values.at(k));
  return evaluate(v, {});
}

Eigen::VectorXd Factor::whitened_residual(const Values& values) const {
  return noise_.whiten(residual(values));
}

double Factor::error(const Values& values) const {
  return whitened_residual(values).squaredNorm();
}

}  // namespace dfg::graph
