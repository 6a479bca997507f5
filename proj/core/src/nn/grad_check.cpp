#include "aad/nn/grad_check.hpp"

#include <cmath>

namespace aad::nn {

GradCheckReport finite_diff_check(
    const std::vector<ParamRef>& params,
    const std::function<double()>& forward_backward,
    const std::function<double()>& forward_only, double h, double guard) {
  forward_backward();
  std::vector<Tensor> backprop;
  backprop.reserve(params.size());
  for (const auto& p : params) backprop.push_back(*p.grad);

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p].value;
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      const double saved = w.data[i];
      w.data[i] = saved + h;
      const double f_plus = forward_only();
      w.data[i] = saved - h;
      const double f_minus = forward_only();
      w.data[i] = saved;

      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double analytic = backprop[p].data[i];
      const double denom =
          std::max({std::fabs(numeric), std::fabs(analytic), guard});
      const double rel = std::fabs(numeric - analytic) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = params[p].name + "[" + std::to_string(i) + "]";
        report.worst_backprop = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace aad::nn
