#include "aad/dsp/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "aad/dsp/filters.hpp"

namespace aad::dsp {

Trial preprocess_trial(const Signal& raw_eeg, const Signal& raw_audio_a,
                       const Signal& raw_audio_b, Stream attended,
                       const PreprocessConfig& cfg) {
  Signal eeg = fir_bandpass_zero_phase(raw_eeg, cfg.band_lo_hz, cfg.band_hi_hz);
  eeg = resample(eeg, cfg.out_rate);
  eeg = rereference_and_center(eeg);

  auto extract = [&](const Signal& audio) {
    if (cfg.envelope == EnvelopeMethod::kGammatone)
      return gammatone_envelope(audio, cfg.gammatone, cfg.out_rate);
    return hilbert_envelope(audio, cfg.hilbert_lp_hz, cfg.out_rate);
  };
  Signal env_a = extract(raw_audio_a);
  Signal env_b = extract(raw_audio_b);

  const Eigen::Index len = std::min({eeg.samples(), env_a.samples(),
                                     env_b.samples()});
  const Eigen::Index worst = std::max({eeg.samples(), env_a.samples(),
                                       env_b.samples()});
  if (worst - len > 2)
    throw_value("stream lengths diverge after preprocessing: eeg=",
                eeg.samples(), ", env_a=", env_a.samples(),
                ", env_b=", env_b.samples(),
                " (more than 2 samples apart)");

  Trial t;
  t.eeg = eeg.data.leftCols(len);
  t.env_a = env_a.data.row(0).head(len).transpose();
  t.env_b = env_b.data.row(0).head(len).transpose();
  t.attended = attended;
  t.rate = cfg.out_rate;
  return t;
}

}  // namespace aad::dsp
