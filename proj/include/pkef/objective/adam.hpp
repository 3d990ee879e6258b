#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pkef/core/params.hpp"

namespace pkef {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive-moment updates over a ParameterStore.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig config = {}) : config_(config) {}

  // grads must align with the store order and shapes.
  void step(ParameterStore& params, std::span<const DenseMatrix> grads);

  std::size_t step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<DenseMatrix> first_;
  std::vector<DenseMatrix> second_;
  std::size_t steps_ = 0;
};

}  // namespace pkef
