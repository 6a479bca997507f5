#pragma once

#include <cstdint>
#include <vector>

#include "aad/nn/tensor.hpp"

namespace aad::nn {

enum class Mode { kTrain, kEval };

// ---------------------------------------------------------------------------
// 1-D convolution, stride 1, symmetric zero "same" padding, odd kernel.

struct Conv1dParams {
  Tensor weight;  // [C_out, C_in, k]
  Tensor bias;    // [C_out]
};

/// x: [C_in, T] -> [C_out, T].
Tensor conv1d(const Tensor& x, const Conv1dParams& p);

struct Conv1dGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};

Conv1dGrads conv1d_backward(const Tensor& grad_out, const Tensor& cached_input,
                            const Conv1dParams& p);

/// Accumulating variant used by the training loop; grad_input may be null
/// for the first layer of a branch.
void conv1d_backward_acc(const Tensor& grad_out, const Tensor& cached_input,
                         const Conv1dParams& p, Tensor* grad_input,
                         Tensor& grad_weight, Tensor& grad_bias);

// ---------------------------------------------------------------------------
// Max pooling over the last dimension.

struct MaxPoolCache {
  std::vector<std::int64_t> in_shape;
  std::vector<std::int32_t> argmax;  // flat input index per output element
};

/// x: [C, T] -> [C, floor((T - k)/stride) + 1]; remainder samples dropped.
/// Ties route to the first maximal index.
Tensor maxpool1d(const Tensor& x, int k, int stride,
                 MaxPoolCache* cache = nullptr);

/// Same-length variant (stride 1, window truncated at the edges), used by
/// the Inception pooling branch.
Tensor maxpool1d_same(const Tensor& x, int k, MaxPoolCache* cache = nullptr);

Tensor maxpool1d_backward(const Tensor& grad_out, const MaxPoolCache& cache);

// ---------------------------------------------------------------------------
// Batch normalization over (batch, time) per channel.

struct BatchNorm1dParams {
  Tensor gamma;         // [C]
  Tensor beta;          // [C]
  Tensor running_mean;  // [C]
  Tensor running_var;   // [C]
  double momentum = 0.1;
  double eps = 1e-5;
};

BatchNorm1dParams make_batchnorm(std::int64_t channels, double momentum = 0.1,
                                 double eps = 1e-5);

struct BatchNormCache {
  Tensor x_hat;                 // normalized pre-affine input [B, C, T]
  std::vector<double> inv_std;  // per channel
};

/// x: [B, C, T]. Train mode normalizes with batch statistics (biased
/// variance) and updates running statistics (unbiased) with the declared
/// momentum; eval mode uses the running statistics.
Tensor batchnorm1d(const Tensor& x, BatchNorm1dParams& p, Mode mode,
                   BatchNormCache* cache = nullptr);

/// Train-mode pass (mutates running statistics).
Tensor batchnorm1d_train(const Tensor& x, BatchNorm1dParams& p,
                         BatchNormCache* cache = nullptr);

/// Eval-mode pass over the running statistics; params untouched.
Tensor batchnorm1d_eval(const Tensor& x, const BatchNorm1dParams& p);

struct BatchNormGrads {
  Tensor input;
  Tensor gamma;
  Tensor beta;
};

BatchNormGrads batchnorm1d_backward(const Tensor& grad_out,
                                    const BatchNormCache& cache,
                                    const BatchNorm1dParams& p);

// ---------------------------------------------------------------------------
// Fully connected layer.

struct DenseParams {
  Tensor weight;  // [F_out, F_in]
  Tensor bias;    // [F_out]
};

/// x: [B, F_in] -> [B, F_out].
Tensor dense(const Tensor& x, const DenseParams& p);

struct DenseGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& cached_input,
                          const DenseParams& p);

// ---------------------------------------------------------------------------
// Activations (elementwise; softmax over the last dimension).

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input);

Tensor elu(const Tensor& x);  // alpha = 1
Tensor elu_backward(const Tensor& grad_out, const Tensor& cached_input);

/// Rows sum to 1; stabilized by max subtraction.
Tensor softmax_lastdim(const Tensor& x);

// ---------------------------------------------------------------------------
// Dropout.

struct DropoutCache {
  std::vector<double> scale;  // 0 or 1/(1-rate) per element
};

/// Train mode zeroes each element independently with probability `rate` and
/// scales survivors by 1/(1-rate); eval mode is the identity. Deterministic
/// given rng_seed. rate must lie in [0, 1).
Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t rng_seed,
               DropoutCache* cache = nullptr);

Tensor dropout_backward(const Tensor& grad_out, const DropoutCache& cache);

}  // namespace aad::nn
