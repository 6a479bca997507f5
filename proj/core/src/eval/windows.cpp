#include "aad/eval/windows.hpp"

#include <cmath>

#include "aad/errors.hpp"

namespace aad::eval {

std::vector<Window> make_windows(Eigen::Index trial_samples,
                                 Eigen::Index window_samples, double overlap) {
  if (window_samples < 1)
    throw_value("make_windows: window must be >= 1 sample");
  if (overlap < 0.0 || overlap >= 1.0)
    throw_value("make_windows: overlap must lie in [0, 1), got ", overlap);
  std::vector<Window> out;
  if (trial_samples < window_samples) return out;  // flagged-empty case

  const auto stride = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(
             static_cast<double>(window_samples) * (1.0 - overlap))));
  const Eigen::Index count = (trial_samples - window_samples) / stride + 1;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i)
    out.push_back({i * stride, window_samples});
  return out;
}

Eigen::Index count_nonoverlapping(Eigen::Index trial_samples,
                                  Eigen::Index window_samples) {
  if (window_samples < 1)
    throw_value("count_nonoverlapping: window must be >= 1 sample");
  return trial_samples / window_samples;
}

}  // namespace aad::eval
