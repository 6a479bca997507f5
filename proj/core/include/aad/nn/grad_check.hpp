#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aad/nn/optimizer.hpp"

namespace aad::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  double worst_backprop = 0.0;
  double worst_numeric = 0.0;
};

/// Compares backprop gradients against central finite differences for every
/// scalar in `params`. `forward_backward` must zero and refill the grads and
/// return the loss; `forward_only` must evaluate the same loss without
/// touching grads. Both must be pure given the current parameter values
/// (fixed rng seeds). Relative error uses max(|a|, |b|, guard) as the
/// denominator so near-zero gradients compare absolutely.
GradCheckReport finite_diff_check(const std::vector<ParamRef>& params,
                                  const std::function<double()>& forward_backward,
                                  const std::function<double()>& forward_only,
                                  double h = 1e-5, double guard = 1e-4);

}  // namespace aad::nn
