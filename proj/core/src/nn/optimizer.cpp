#include "aad/nn/optimizer.hpp"

#include <cmath>

namespace aad::nn {

AdamW::AdamW(AdamWConfig cfg, const std::vector<ParamRef>& params)
    : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.value->shape);
    v_.emplace_back(p.value->shape);
  }
}

void AdamW::step(const std::vector<ParamRef>& params) {
  if (params.size() != m_.size())
    throw_shape("AdamW::step: ", params.size(), " params, state holds ",
                m_.size());
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p].value;
    const Tensor& g = *params[p].grad;
    check_same_shape(w, g, "AdamW gradient");
    Tensor& m = m_[p];
    Tensor& v = v_[p];
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      const double gi = g.data[i];
      if (!std::isfinite(gi))
        throw_value("AdamW: non-finite gradient in parameter '",
                    params[p].name, "' at index ", i);
      m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * gi;
      v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      const double w_old = w.data[i];
      w.data[i] = w_old - cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps) -
                  cfg_.lr * cfg_.weight_decay * w_old;
    }
  }
}

void zero_grads(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.grad->fill(0.0);
}

}  // namespace aad::nn
