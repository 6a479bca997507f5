#include "aad/data/synth.hpp"

#include <cmath>

#include "aad/dsp/filters.hpp"
#include "aad/errors.hpp"
#include "aad/rng.hpp"

namespace aad::data {

namespace {

/// Speech-like envelope: low-passed Gaussian noise, rectified and smoothed,
/// scaled to unit mean. Dominant modulation sits around a few Hz.
Eigen::VectorXd make_envelope(Eigen::Index n, double rate, RandomStream rng) {
  Eigen::MatrixXd noise(1, n);
  for (Eigen::Index t = 0; t < n; ++t) noise(0, t) = rng.normal();
  const Eigen::VectorXd lp1 = dsp::design_lowpass(7.0, rate, 65);
  Eigen::MatrixXd env = dsp::convolve_same(noise, lp1).cwiseAbs();
  const Eigen::VectorXd lp2 = dsp::design_lowpass(12.0, rate, 33);
  env = dsp::convolve_same(env, lp2).cwiseMax(0.0);
  const double mean = env.mean();
  if (mean > 0.0) env /= mean;
  return env.row(0).transpose();
}

/// Unit-norm causal response kernel with exponential decay.
Eigen::VectorXd make_kernel(int taps, const Eigen::VectorXd& shared,
                            double jitter, RandomStream rng) {
  Eigen::VectorXd k(taps);
  for (int i = 0; i < taps; ++i) {
    const double decay = std::exp(-2.5 * static_cast<double>(i) / taps);
    k[i] = (shared[i] * (1.0 - jitter) + rng.normal() * jitter) * decay;
  }
  const double norm = k.norm();
  if (norm > 0.0) k /= norm;
  return k;
}

Eigen::VectorXd causal_convolve(const Eigen::VectorXd& signal,
                                const Eigen::VectorXd& kernel) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(signal.size());
  for (Eigen::Index t = 0; t < signal.size(); ++t) {
    const Eigen::Index k_max = std::min<Eigen::Index>(kernel.size(), t + 1);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < k_max; ++k)
      acc += kernel[k] * signal[t - k];
    out[t] = acc;
  }
  return out;
}

std::string two_digit(int v) {
  return (v < 10 ? "0" : "") + std::to_string(v);
}

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
  if (cfg.n_subjects < 1 || cfg.trials_per_subject < 1)
    throw_value("synth: need at least one subject and one trial");
  if (cfg.n_channels < 2)
    throw_value("synth: need >= 2 channels, got ", cfg.n_channels);
  if (cfg.trf_length < 1 ||
      static_cast<double>(cfg.trf_length) / cfg.rate > 0.25 + 1e-9)
    throw_value("synth: trf_length must span at most 250 ms, got ",
                cfg.trf_length, " taps at ", cfg.rate, " Hz");
  if (cfg.leakage_gain >= cfg.attended_gain && cfg.n_informative != 0)
    throw_value("synth: leakage gain ", cfg.leakage_gain,
                " must stay below attended gain ", cfg.attended_gain);

  const auto n = static_cast<Eigen::Index>(std::llround(cfg.trial_s * cfg.rate));
  const int n_informative =
      cfg.n_informative < 0 ? cfg.n_channels
                            : std::min(cfg.n_informative, cfg.n_channels);
  RandomStream root(cfg.seed);

  // Shared kernel basis so subjects resemble each other up to jitter.
  Eigen::MatrixXd shared(cfg.n_channels, cfg.trf_length);
  {
    RandomStream rng = root.child(1);
    for (Eigen::Index ch = 0; ch < cfg.n_channels; ++ch)
      for (int i = 0; i < cfg.trf_length; ++i) shared(ch, i) = rng.normal();
  }

  Dataset ds;
  ds.name = cfg.name;
  for (int ch = 0; ch < cfg.n_channels; ++ch)
    ds.channel_labels.push_back("ch" + two_digit(ch));

  for (int s = 0; s < cfg.n_subjects; ++s) {
    SubjectData subject;
    subject.subject_id = "sub" + two_digit(s);

    std::vector<Eigen::VectorXd> kernels;
    kernels.reserve(static_cast<std::size_t>(cfg.n_channels));
    for (int ch = 0; ch < cfg.n_channels; ++ch) {
      RandomStream rng = root.child(
          derive_seed(2, static_cast<std::uint64_t>(s * 1000 + ch)));
      kernels.push_back(make_kernel(cfg.trf_length,
                                    shared.row(ch).transpose(),
                                    cfg.subject_kernel_jitter, rng));
    }

    for (int t = 0; t < cfg.trials_per_subject; ++t) {
      TrialRecord rec;
      rec.trial_id = "trial" + two_digit(t);
      rec.eeg_rate = cfg.rate;
      rec.audio_rate = cfg.rate;
      rec.duration_s = static_cast<double>(n) / cfg.rate;

      const std::uint64_t stim_scope =
          cfg.share_stimuli_across_subjects ? 0u
                                            : static_cast<std::uint64_t>(s + 1);
      const std::string stim_prefix =
          cfg.share_stimuli_across_subjects
              ? "stim" + two_digit(t)
              : subject.subject_id + "_stim" + two_digit(t);
      rec.stimulus_a = stim_prefix + "a";
      rec.stimulus_b = stim_prefix + "b";
      rec.env_a = make_envelope(
          n, cfg.rate,
          root.child(derive_seed(3, stim_scope * 100000 +
                                        static_cast<std::uint64_t>(t) * 2)));
      rec.env_b = make_envelope(
          n, cfg.rate,
          root.child(derive_seed(3, stim_scope * 100000 +
                                        static_cast<std::uint64_t>(t) * 2 + 1)));

      // Balanced 50/50 attended sides (exact for even trial counts).
      rec.attended = t % 2 == 0 ? Stream::kA : Stream::kB;
      rec.attended_stimulus =
          rec.attended == Stream::kA ? rec.stimulus_a : rec.stimulus_b;
      const Eigen::VectorXd& att =
          rec.attended == Stream::kA ? rec.env_a : rec.env_b;
      const Eigen::VectorXd& unatt =
          rec.attended == Stream::kA ? rec.env_b : rec.env_a;

      RandomStream noise_rng = root.child(
          derive_seed(4, static_cast<std::uint64_t>(s) * 100000 +
                             static_cast<std::uint64_t>(t)));
      rec.eeg.resize(cfg.n_channels, n);
      for (int ch = 0; ch < cfg.n_channels; ++ch) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        if (ch < n_informative) {
          row = cfg.attended_gain *
                    causal_convolve(att, kernels[static_cast<std::size_t>(ch)]) +
                cfg.leakage_gain *
                    causal_convolve(unatt, kernels[static_cast<std::size_t>(ch)]);
        }
        for (Eigen::Index i = 0; i < n; ++i)
          row[i] += cfg.noise_std * noise_rng.normal();
        rec.eeg.row(ch) = row.transpose();
      }
      subject.trials.push_back(std::move(rec));
    }
    ds.subjects.push_back(std::move(subject));
  }
  return ds;
}

}  // namespace aad::data
