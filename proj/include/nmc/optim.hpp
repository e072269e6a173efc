#pragma once

#include <cstdint>
#include <vector>

#include "nmc/tensor.hpp"

namespace nmc {

struct AdamWConfig {
  float lr = 2e-5f;
  float weight_decay = 2e-5f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

// Adam with decoupled weight decay: the decay term reads the pre-update
// weight and bypasses the moment estimates. Bias correction is computed in
// double.
class AdamW {
 public:
  AdamW(std::vector<TensorPtr> params, AdamWConfig config);

  // Throws op_error when a parameter has no gradient buffer.
  void step();
  void zero_grad();
  int64_t step_count() const { return step_; }

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  AdamWConfig config_;
  int64_t step_ = 0;
};

}  // namespace nmc
