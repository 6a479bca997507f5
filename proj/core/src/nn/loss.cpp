#include "aad/nn/loss.hpp"

#include <cmath>

#include "aad/nn/layers.hpp"

namespace aad::nn {

CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         const std::vector<int>& labels) {
  if (logits.rank() != 2)
    throw_shape("softmax_cross_entropy logits must be rank 2 [B, C], got ",
                logits.shape_str());
  const std::int64_t b_sz = logits.dim(0), n_classes = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != b_sz)
    throw_shape("softmax_cross_entropy: ", labels.size(), " labels for batch ",
                b_sz);

  CrossEntropyResult r;
  r.probabilities = softmax_lastdim(logits);
  r.grad_logits = Tensor(logits.shape);
  double total = 0.0;
  for (std::int64_t b = 0; b < b_sz; ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    if (label < 0 || label >= n_classes)
      throw_value("softmax_cross_entropy: label ", label,
                  " outside [0, ", n_classes, ") at row ", b);
    const double* in = logits.ptr() + b * n_classes;
    const double* pr = r.probabilities.ptr() + b * n_classes;
    double m = in[0];
    for (std::int64_t j = 1; j < n_classes; ++j) m = std::max(m, in[j]);
    double lse = 0.0;
    for (std::int64_t j = 0; j < n_classes; ++j) lse += std::exp(in[j] - m);
    total += (m + std::log(lse)) - in[label];

    double* g = r.grad_logits.ptr() + b * n_classes;
    for (std::int64_t j = 0; j < n_classes; ++j)
      g[j] = (pr[j] - (j == label ? 1.0 : 0.0)) / static_cast<double>(b_sz);
  }
  r.loss = total / static_cast<double>(b_sz);
  return r;
}

}  // namespace aad::nn
