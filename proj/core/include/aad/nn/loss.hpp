#pragma once

#include <vector>

#include "aad/nn/tensor.hpp"

namespace aad::nn {

struct CrossEntropyResult {
  double loss = 0.0;     // mean over the batch
  Tensor grad_logits;    // (softmax - onehot) / B
  Tensor probabilities;  // softmax rows
};

/// logits: [B, n_classes]; labels: class index per row.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         const std::vector<int>& labels);

}  // namespace aad::nn
