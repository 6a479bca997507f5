#pragma once

#include <vector>

#include "aad/dsp/signal.hpp"

namespace aad::dsp {

/// Gammatone filter bank on the ERB-rate scale with power-law compression.
struct GammatoneBankSpec {
  double f_lo_hz = 150.0;
  double f_hi_hz = 4000.0;
  int n_bands = 28;
  double bandwidth_scale = 1.5;  // multiples of ERB(fc)
  int order = 4;
  double compression = 0.6;
};

/// Glasberg & Moore equivalent rectangular bandwidth at centre frequency fc.
double erb_hz(double fc_hz);

/// ERB-rate scale and its inverse.
double erb_rate(double f_hz);
double erb_rate_inverse(double rate);

/// Centre frequencies equally spaced on the ERB-rate scale (inclusive ends).
std::vector<double> gammatone_center_frequencies(const GammatoneBankSpec& spec);

/// Compressed subband envelope sum: per band, the magnitude envelope of a
/// 4th-order complex gammatone filter raised to the compression exponent;
/// bands summed, low-passed at 0.4 * out_rate and resampled. Nonnegative.
Signal gammatone_envelope(const Signal& audio, const GammatoneBankSpec& spec,
                          double out_rate);

/// |analytic signal| low-passed at lp_cut_hz and resampled. Nonnegative.
Signal hilbert_envelope(const Signal& audio, double lp_cut_hz,
                        double out_rate);

}  // namespace aad::dsp
