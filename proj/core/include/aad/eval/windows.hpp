#pragma once

#include <Eigen/Dense>
#include <vector>

namespace aad::eval {

struct Window {
  Eigen::Index start = 0;
  Eigen::Index length = 0;
  Eigen::Index end() const { return start + length; }
};

struct WindowSpec {
  double length_s = 20.0;
  double overlap = 0.5;  // fraction, >= 0.5 for test windowing
};

/// Uniform-stride windows with stride = length * (1 - overlap), never
/// extending past the trial end. A trial shorter than the window yields an
/// empty list (callers treat that as a flagged skip).
std::vector<Window> make_windows(Eigen::Index trial_samples,
                                 Eigen::Index window_samples, double overlap);

/// Count of non-overlapping windows, used for the chance level.
Eigen::Index count_nonoverlapping(Eigen::Index trial_samples,
                                  Eigen::Index window_samples);

}  // namespace aad::eval
