#include "aad/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "aad/rng.hpp"

namespace aad::nn {

namespace {

void check_conv_shapes(const Tensor& x, const Conv1dParams& p) {
  if (x.rank() != 2)
    throw_shape("conv1d input must be rank 2 [C_in, T], got ", x.shape_str());
  if (p.weight.rank() != 3)
    throw_shape("conv1d weight must be rank 3 [C_out, C_in, k], got ",
                p.weight.shape_str());
  if (p.weight.dim(2) % 2 == 0)
    throw_value("conv1d kernel size must be odd, got ", p.weight.dim(2));
  if (x.dim(0) != p.weight.dim(1))
    throw_shape("conv1d expected ", p.weight.dim(1), " input channels, got ",
                x.dim(0));
  if (p.bias.rank() != 1 || p.bias.dim(0) != p.weight.dim(0))
    throw_shape("conv1d bias shape ", p.bias.shape_str(),
                " does not match C_out=", p.weight.dim(0));
}

}  // namespace

Tensor conv1d(const Tensor& x, const Conv1dParams& p) {
  check_conv_shapes(x, p);
  const std::int64_t c_in = x.dim(0), t_len = x.dim(1);
  const std::int64_t c_out = p.weight.dim(0), k = p.weight.dim(2);
  const std::int64_t pad = (k - 1) / 2;

  Tensor y({c_out, t_len});
  for (std::int64_t co = 0; co < c_out; ++co) {
    double* yrow = y.ptr() + co * t_len;
    const double b = p.bias.data[static_cast<std::size_t>(co)];
    for (std::int64_t t = 0; t < t_len; ++t) yrow[t] = b;
    for (std::int64_t ci = 0; ci < c_in; ++ci) {
      const double* xrow = x.ptr() + ci * t_len;
      const double* wrow = p.weight.ptr() + (co * c_in + ci) * k;
      for (std::int64_t kk = 0; kk < k; ++kk) {
        const double w = wrow[kk];
        if (w == 0.0) continue;
        const std::int64_t off = kk - pad;  // y[t] += w * x[t + off]
        const std::int64_t t0 = std::max<std::int64_t>(0, -off);
        const std::int64_t t1 = std::min<std::int64_t>(t_len, t_len - off);
        const double* xs = xrow + off;
        for (std::int64_t t = t0; t < t1; ++t) yrow[t] += w * xs[t];
      }
    }
  }
  return y;
}

void conv1d_backward_acc(const Tensor& grad_out, const Tensor& cached_input,
                         const Conv1dParams& p, Tensor* grad_input,
                         Tensor& grad_weight, Tensor& grad_bias) {
  check_conv_shapes(cached_input, p);
  const std::int64_t c_in = cached_input.dim(0), t_len = cached_input.dim(1);
  const std::int64_t c_out = p.weight.dim(0), k = p.weight.dim(2);
  const std::int64_t pad = (k - 1) / 2;
  if (grad_out.rank() != 2 || grad_out.dim(0) != c_out ||
      grad_out.dim(1) != t_len)
    throw_shape("conv1d_backward: grad_out shape ", grad_out.shape_str(),
                " does not match forward output [", c_out, ", ", t_len, "]");
  check_same_shape(p.weight, grad_weight, "conv1d_backward grad_weight");
  check_same_shape(p.bias, grad_bias, "conv1d_backward grad_bias");

  for (std::int64_t co = 0; co < c_out; ++co) {
    const double* grow = grad_out.ptr() + co * t_len;
    double sum = 0.0;
    for (std::int64_t t = 0; t < t_len; ++t) sum += grow[t];
    grad_bias.data[static_cast<std::size_t>(co)] += sum;

    for (std::int64_t ci = 0; ci < c_in; ++ci) {
      const double* xrow = cached_input.ptr() + ci * t_len;
      const double* wrow = p.weight.ptr() + (co * c_in + ci) * k;
      double* gwrow = grad_weight.ptr() + (co * c_in + ci) * k;
      double* gxrow =
          grad_input != nullptr ? grad_input->ptr() + ci * t_len : nullptr;
      for (std::int64_t kk = 0; kk < k; ++kk) {
        const std::int64_t off = kk - pad;
        const std::int64_t t0 = std::max<std::int64_t>(0, -off);
        const std::int64_t t1 = std::min<std::int64_t>(t_len, t_len - off);
        const double* xs = xrow + off;
        double acc = 0.0;
        for (std::int64_t t = t0; t < t1; ++t) acc += grow[t] * xs[t];
        gwrow[kk] += acc;
        if (gxrow != nullptr) {
          const double w = wrow[kk];
          if (w != 0.0) {
            double* gx = gxrow + off;
            for (std::int64_t t = t0; t < t1; ++t) gx[t] += w * grow[t];
          }
        }
      }
    }
  }
}

Conv1dGrads conv1d_backward(const Tensor& grad_out, const Tensor& cached_input,
                            const Conv1dParams& p) {
  Conv1dGrads g;
  g.input = Tensor(cached_input.shape);
  g.weight = Tensor(p.weight.shape);
  g.bias = Tensor(p.bias.shape);
  conv1d_backward_acc(grad_out, cached_input, p, &g.input, g.weight, g.bias);
  return g;
}

// ---------------------------------------------------------------------------

Tensor maxpool1d(const Tensor& x, int k, int stride, MaxPoolCache* cache) {
  if (x.rank() != 2)
    throw_shape("maxpool1d input must be rank 2 [C, T], got ", x.shape_str());
  const std::int64_t c = x.dim(0), t_len = x.dim(1);
  if (t_len < k)
    throw_value("maxpool1d: window longer than signal (T=", t_len, ", k=", k,
                ")");
  const std::int64_t t_out = (t_len - k) / stride + 1;
  Tensor y({c, t_out});
  if (cache != nullptr) {
    cache->in_shape = x.shape;
    cache->argmax.assign(static_cast<std::size_t>(c * t_out), 0);
  }
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double* xrow = x.ptr() + ch * t_len;
    double* yrow = y.ptr() + ch * t_out;
    for (std::int64_t o = 0; o < t_out; ++o) {
      const std::int64_t b = o * stride;
      std::int64_t best = b;
      double m = xrow[b];
      for (std::int64_t t = b + 1; t < b + k; ++t) {
        if (xrow[t] > m) {
          m = xrow[t];
          best = t;
        }
      }
      yrow[o] = m;
      if (cache != nullptr)
        cache->argmax[static_cast<std::size_t>(ch * t_out + o)] =
            static_cast<std::int32_t>(ch * t_len + best);
    }
  }
  return y;
}

Tensor maxpool1d_same(const Tensor& x, int k, MaxPoolCache* cache) {
  if (x.rank() != 2)
    throw_shape("maxpool1d_same input must be rank 2 [C, T], got ",
                x.shape_str());
  const std::int64_t c = x.dim(0), t_len = x.dim(1);
  const std::int64_t half = (k - 1) / 2;
  Tensor y({c, t_len});
  if (cache != nullptr) {
    cache->in_shape = x.shape;
    cache->argmax.assign(static_cast<std::size_t>(c * t_len), 0);
  }
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double* xrow = x.ptr() + ch * t_len;
    double* yrow = y.ptr() + ch * t_len;
    for (std::int64_t t = 0; t < t_len; ++t) {
      const std::int64_t b = std::max<std::int64_t>(0, t - half);
      const std::int64_t e = std::min<std::int64_t>(t_len, t + half + 1);
      std::int64_t best = b;
      double m = xrow[b];
      for (std::int64_t s = b + 1; s < e; ++s) {
        if (xrow[s] > m) {
          m = xrow[s];
          best = s;
        }
      }
      yrow[t] = m;
      if (cache != nullptr)
        cache->argmax[static_cast<std::size_t>(ch * t_len + t)] =
            static_cast<std::int32_t>(ch * t_len + best);
    }
  }
  return y;
}

Tensor maxpool1d_backward(const Tensor& grad_out, const MaxPoolCache& cache) {
  if (cache.in_shape.empty())
    throw_value("maxpool1d_backward: missing forward cache");
  if (grad_out.numel() != static_cast<std::int64_t>(cache.argmax.size()))
    throw_shape("maxpool1d_backward: grad_out has ", grad_out.numel(),
                " elements, cache has ", cache.argmax.size());
  Tensor gx(cache.in_shape);
  for (std::size_t i = 0; i < cache.argmax.size(); ++i)
    gx.data[static_cast<std::size_t>(cache.argmax[i])] += grad_out.data[i];
  return gx;
}

// ---------------------------------------------------------------------------

BatchNorm1dParams make_batchnorm(std::int64_t channels, double momentum,
                                 double eps) {
  BatchNorm1dParams p;
  p.gamma = Tensor({channels});
  p.gamma.fill(1.0);
  p.beta = Tensor({channels});
  p.running_mean = Tensor({channels});
  p.running_var = Tensor({channels});
  p.running_var.fill(1.0);
  p.momentum = momentum;
  p.eps = eps;
  return p;
}

namespace {

void check_bn_shapes(const Tensor& x, const BatchNorm1dParams& p) {
  if (x.rank() != 3)
    throw_shape("batchnorm1d input must be rank 3 [B, C, T], got ",
                x.shape_str());
  if (x.dim(1) != p.gamma.dim(0))
    throw_shape("batchnorm1d expected ", p.gamma.dim(0), " channels, got ",
                x.dim(1));
}

/// Normalizes one channel with the given statistics, optionally recording
/// the pre-affine values.
void apply_bn_channel(const Tensor& x, Tensor& y, std::int64_t ch,
                      double mean, double inv_std, double gamma, double beta,
                      Tensor* x_hat) {
  const std::int64_t b_sz = x.dim(0), c = x.dim(1), t_len = x.dim(2);
  for (std::int64_t bb = 0; bb < b_sz; ++bb) {
    const double* row = x.ptr() + (bb * c + ch) * t_len;
    double* yrow = y.ptr() + (bb * c + ch) * t_len;
    double* hrow =
        x_hat != nullptr ? x_hat->ptr() + (bb * c + ch) * t_len : nullptr;
    for (std::int64_t t = 0; t < t_len; ++t) {
      const double xh = (row[t] - mean) * inv_std;
      if (hrow != nullptr) hrow[t] = xh;
      yrow[t] = gamma * xh + beta;
    }
  }
}

}  // namespace

Tensor batchnorm1d_train(const Tensor& x, BatchNorm1dParams& p,
                         BatchNormCache* cache) {
  check_bn_shapes(x, p);
  const std::int64_t b_sz = x.dim(0), c = x.dim(1), t_len = x.dim(2);
  const std::int64_t m = b_sz * t_len;  // samples per channel
  if (m < 2)
    throw_value("batchnorm1d train mode needs B*T >= 2 per channel, got ", m);

  Tensor y(x.shape);
  if (cache != nullptr) {
    cache->x_hat = Tensor(x.shape);
    cache->inv_std.assign(static_cast<std::size_t>(c), 0.0);
  }
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t bb = 0; bb < b_sz; ++bb) {
      const double* row = x.ptr() + (bb * c + ch) * t_len;
      for (std::int64_t t = 0; t < t_len; ++t) {
        sum += row[t];
        sum_sq += row[t] * row[t];
      }
    }
    const double mean = sum / static_cast<double>(m);
    double var = sum_sq / static_cast<double>(m) - mean * mean;  // biased
    if (var < 0.0) var = 0.0;
    const double unbiased =
        m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1)
              : var;
    auto& rm = p.running_mean.data[static_cast<std::size_t>(ch)];
    auto& rv = p.running_var.data[static_cast<std::size_t>(ch)];
    rm = (1.0 - p.momentum) * rm + p.momentum * mean;
    rv = (1.0 - p.momentum) * rv + p.momentum * unbiased;

    const double inv_std = 1.0 / std::sqrt(var + p.eps);
    if (cache != nullptr)
      cache->inv_std[static_cast<std::size_t>(ch)] = inv_std;
    apply_bn_channel(x, y, ch, mean, inv_std,
                     p.gamma.data[static_cast<std::size_t>(ch)],
                     p.beta.data[static_cast<std::size_t>(ch)],
                     cache != nullptr ? &cache->x_hat : nullptr);
  }
  return y;
}

Tensor batchnorm1d_eval(const Tensor& x, const BatchNorm1dParams& p) {
  check_bn_shapes(x, p);
  const std::int64_t c = x.dim(1);
  Tensor y(x.shape);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const auto i = static_cast<std::size_t>(ch);
    const double inv_std = 1.0 / std::sqrt(p.running_var.data[i] + p.eps);
    apply_bn_channel(x, y, ch, p.running_mean.data[i], inv_std,
                     p.gamma.data[i], p.beta.data[i], nullptr);
  }
  return y;
}

Tensor batchnorm1d(const Tensor& x, BatchNorm1dParams& p, Mode mode,
                   BatchNormCache* cache) {
  if (mode == Mode::kTrain) return batchnorm1d_train(x, p, cache);
  return batchnorm1d_eval(x, p);
}

BatchNormGrads batchnorm1d_backward(const Tensor& grad_out,
                                    const BatchNormCache& cache,
                                    const BatchNorm1dParams& p) {
  const Tensor& xh = cache.x_hat;
  check_same_shape(xh, grad_out, "batchnorm1d_backward grad_out");
  const std::int64_t b_sz = xh.dim(0), c = xh.dim(1), t_len = xh.dim(2);
  const double m = static_cast<double>(b_sz * t_len);

  BatchNormGrads g;
  g.input = Tensor(xh.shape);
  g.gamma = Tensor({c});
  g.beta = Tensor({c});

  for (std::int64_t ch = 0; ch < c; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::int64_t bb = 0; bb < b_sz; ++bb) {
      const double* go = grad_out.ptr() + (bb * c + ch) * t_len;
      const double* h = xh.ptr() + (bb * c + ch) * t_len;
      for (std::int64_t t = 0; t < t_len; ++t) {
        sum_g += go[t];
        sum_gx += go[t] * h[t];
      }
    }
    g.beta.data[static_cast<std::size_t>(ch)] = sum_g;
    g.gamma.data[static_cast<std::size_t>(ch)] = sum_gx;

    const double gamma = p.gamma.data[static_cast<std::size_t>(ch)];
    const double inv_std = cache.inv_std[static_cast<std::size_t>(ch)];
    const double k1 = gamma * inv_std;
    for (std::int64_t bb = 0; bb < b_sz; ++bb) {
      const double* go = grad_out.ptr() + (bb * c + ch) * t_len;
      const double* h = xh.ptr() + (bb * c + ch) * t_len;
      double* gx = g.input.ptr() + (bb * c + ch) * t_len;
      for (std::int64_t t = 0; t < t_len; ++t)
        gx[t] = k1 * (go[t] - sum_g / m - h[t] * sum_gx / m);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

Tensor dense(const Tensor& x, const DenseParams& p) {
  if (x.rank() != 2)
    throw_shape("dense input must be rank 2 [B, F], got ", x.shape_str());
  if (p.weight.rank() != 2 || x.dim(1) != p.weight.dim(1))
    throw_shape("dense expected ", p.weight.dim(1), " input features, got ",
                x.dim(1));
  const std::int64_t b_sz = x.dim(0), f_in = x.dim(1), f_out = p.weight.dim(0);
  Tensor y({b_sz, f_out});
  for (std::int64_t b = 0; b < b_sz; ++b) {
    const double* xrow = x.ptr() + b * f_in;
    double* yrow = y.ptr() + b * f_out;
    for (std::int64_t o = 0; o < f_out; ++o) {
      const double* wrow = p.weight.ptr() + o * f_in;
      double acc = p.bias.data[static_cast<std::size_t>(o)];
      for (std::int64_t i = 0; i < f_in; ++i) acc += wrow[i] * xrow[i];
      yrow[o] = acc;
    }
  }
  return y;
}

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& cached_input,
                          const DenseParams& p) {
  const std::int64_t b_sz = cached_input.dim(0), f_in = cached_input.dim(1);
  const std::int64_t f_out = p.weight.dim(0);
  if (grad_out.rank() != 2 || grad_out.dim(0) != b_sz ||
      grad_out.dim(1) != f_out)
    throw_shape("dense_backward: grad_out shape ", grad_out.shape_str(),
                " does not match [", b_sz, ", ", f_out, "]");
  DenseGrads g;
  g.input = Tensor(cached_input.shape);
  g.weight = Tensor(p.weight.shape);
  g.bias = Tensor(p.bias.shape);
  for (std::int64_t b = 0; b < b_sz; ++b) {
    const double* xrow = cached_input.ptr() + b * f_in;
    const double* go = grad_out.ptr() + b * f_out;
    double* gx = g.input.ptr() + b * f_in;
    for (std::int64_t o = 0; o < f_out; ++o) {
      const double d = go[o];
      g.bias.data[static_cast<std::size_t>(o)] += d;
      const double* wrow = p.weight.ptr() + o * f_in;
      double* gw = g.weight.ptr() + o * f_in;
      for (std::int64_t i = 0; i < f_in; ++i) {
        gw[i] += d * xrow[i];
        gx[i] += d * wrow[i];
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input) {
  check_same_shape(cached_input, grad_out, "relu_backward");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (cached_input.data[i] <= 0.0) g.data[i] = 0.0;
  return g;
}

Tensor elu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : std::expm1(v);
  return y;
}

Tensor elu_backward(const Tensor& grad_out, const Tensor& cached_input) {
  check_same_shape(cached_input, grad_out, "elu_backward");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const double v = cached_input.data[i];
    if (v <= 0.0) g.data[i] *= std::exp(v);
  }
  return g;
}

Tensor softmax_lastdim(const Tensor& x) {
  if (x.rank() < 1) throw_shape("softmax needs at least rank 1");
  const std::int64_t cols = x.shape.back();
  const std::int64_t rows = x.numel() / cols;
  Tensor y(x.shape);
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* in = x.ptr() + r * cols;
    double* out = y.ptr() + r * cols;
    double m = in[0];
    for (std::int64_t j = 1; j < cols; ++j) m = std::max(m, in[j]);
    double denom = 0.0;
    for (std::int64_t j = 0; j < cols; ++j) {
      out[j] = std::exp(in[j] - m);
      denom += out[j];
    }
    for (std::int64_t j = 0; j < cols; ++j) out[j] /= denom;
  }
  return y;
}

// ---------------------------------------------------------------------------

Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t rng_seed,
               DropoutCache* cache) {
  if (rate < 0.0 || rate >= 1.0)
    throw_value("dropout rate must lie in [0, 1), got ", rate);
  if (mode == Mode::kEval || rate == 0.0) {
    if (cache != nullptr)
      cache->scale.assign(static_cast<std::size_t>(x.numel()), 1.0);
    return x;
  }
  RandomStream rng(rng_seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor y = x;
  if (cache != nullptr)
    cache->scale.assign(static_cast<std::size_t>(x.numel()), 0.0);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double s = rng.uniform() < rate ? 0.0 : keep_scale;
    y.data[i] *= s;
    if (cache != nullptr) cache->scale[i] = s;
  }
  return y;
}

Tensor dropout_backward(const Tensor& grad_out, const DropoutCache& cache) {
  if (cache.scale.size() != grad_out.data.size())
    throw_shape("dropout_backward: cache size ", cache.scale.size(),
                " does not match grad_out ", grad_out.data.size());
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= cache.scale[i];
  return g;
}

}  // namespace aad::nn
