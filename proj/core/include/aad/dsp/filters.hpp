#pragma once

#include <Eigen/Dense>

#include "aad/dsp/signal.hpp"

namespace aad::dsp {

/// Windowed-sinc (Hamming) low-pass taps; `taps` forced odd, unit DC gain.
Eigen::VectorXd design_lowpass(double cutoff_hz, double rate, int taps);

/// Band-pass as a difference of low-pass designs, with the residual DC gain
/// subtracted out so a constant input maps exactly to zero.
Eigen::VectorXd design_bandpass(double lo_hz, double hi_hz, double rate,
                                int taps);

enum class EdgeMode {
  kZero,       // samples beyond the signal read as 0
  kReflectOdd  // odd reflection about the end points (suppresses transients)
};

/// Centered same-length convolution of each channel with symmetric taps.
Eigen::MatrixXd convolve_same(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& taps,
                              EdgeMode edges = EdgeMode::kZero);

/// Zero-phase band-pass: the linear-phase FIR is applied forward and
/// time-reversed, squaring the magnitude response. Filter order is
/// 3 * rate / lo rounded up to odd.
Signal fir_bandpass_zero_phase(const Signal& in, double lo_hz, double hi_hz);

/// Polyphase rational resampler. When downsampling, an anti-alias low-pass
/// at cutoff_scale * min(rate, target) is part of the kernel. Output length
/// is round(samples * target / rate). Integer-valued rates required.
Signal resample(const Signal& in, double target_rate,
                double cutoff_scale = 0.45);

/// Common average reference followed by per-channel mean removal.
Signal rereference_and_center(const Signal& eeg);

}  // namespace aad::dsp
