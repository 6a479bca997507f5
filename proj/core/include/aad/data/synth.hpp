#pragma once

#include <cstdint>
#include <string>

#include "aad/data/dataset.hpp"

namespace aad::data {

/// Forward-model generator: per trial, two independent speech-like envelopes
/// (rectified low-passed noise at the working rate); EEG channels are the
/// attended envelope convolved with per-(subject, channel) random causal
/// kernels times attended_gain, plus the unattended envelope convolved with
/// the same kernels times leakage_gain, plus white noise. Attended sides are
/// balanced across trials; generation is a pure function of the config.
struct SynthConfig {
  std::string name = "synth";
  int n_subjects = 8;
  int trials_per_subject = 40;
  double trial_s = 30.0;
  double rate = 64.0;
  int n_channels = 16;
  /// Channels [0, n_informative) carry signal; -1 means all. 0 yields the
  /// zero-signal null dataset.
  int n_informative = -1;
  int trf_length = 16;  // causal kernel taps (<= 250 ms at 64 Hz)
  /// Blend between a shared cross-subject kernel and per-subject variation.
  double subject_kernel_jitter = 0.5;
  double attended_gain = 1.0;
  double leakage_gain = 0.2;
  double noise_std = 0.5;
  /// Reuse the same stimulus ids (and waveform content) for every subject,
  /// as in fixed-playlist recordings; exercises the SI leakage filter.
  bool share_stimuli_across_subjects = true;
  std::uint64_t seed = 0;
};

Dataset synth_generate(const SynthConfig& cfg);

}  // namespace aad::data
