#pragma once

#include "aad/dsp/envelope.hpp"
#include "aad/dsp/signal.hpp"
#include "aad/trial.hpp"

namespace aad::dsp {

enum class EnvelopeMethod { kGammatone, kHilbert };

struct PreprocessConfig {
  double band_lo_hz = 0.5;
  double band_hi_hz = 32.0;
  double out_rate = 64.0;
  EnvelopeMethod envelope = EnvelopeMethod::kGammatone;
  GammatoneBankSpec gammatone;
  double hilbert_lp_hz = 50.0;
};

/// Full trial preprocessing: EEG band-passed, resampled, re-referenced and
/// centered; audio envelopes extracted at the output rate; streams truncated
/// to a common length. Length disagreements beyond 2 samples raise.
Trial preprocess_trial(const Signal& raw_eeg, const Signal& raw_audio_a,
                       const Signal& raw_audio_b, Stream attended,
                       const PreprocessConfig& cfg = {});

}  // namespace aad::dsp
