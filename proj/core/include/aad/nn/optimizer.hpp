#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aad/nn/tensor.hpp"

namespace aad::nn {

/// Named view onto a parameter tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

struct AdamWConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// AdamW with bias correction and decoupled weight decay (the decay shrinks
/// parameters multiplicatively by lr * wd instead of entering the gradient).
class AdamW {
 public:
  AdamW(AdamWConfig cfg, const std::vector<ParamRef>& params);

  /// One update over all parameters; throws naming the parameter if any
  /// gradient entry is non-finite.
  void step(const std::vector<ParamRef>& params);

  std::int64_t step_count() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamWConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

void zero_grads(const std::vector<ParamRef>& params);

}  // namespace aad::nn
