#include "pkef/objective/adam.hpp"

#include <cmath>

#include "pkef/errors.hpp"

namespace pkef {

void AdamOptimizer::step(ParameterStore& params, std::span<const DenseMatrix> grads) {
  if (grads.size() != params.size()) throw UsageError("adam: gradient count mismatch");
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.emplace_back(p.value.rows(), p.value.cols());
      second_.emplace_back(p.value.rows(), p.value.cols());
    }
  }
  if (first_.size() != params.size()) throw UsageError("adam: parameter set changed");
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value.values();
    auto g = grads[i].values();
    if (g.size() != theta.size() || !grads[i].same_shape(params[i].value)) {
      throw UsageError("adam: gradient shape mismatch for '" + params[i].name + "'");
    }
    auto m = first_[i].values();
    auto v = second_[i].values();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      theta[j] -= config_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.eps);
    }
  }
}

}  // namespace pkef
