#include "aad/dsp/envelope.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

#include "aad/dsp/filters.hpp"

namespace aad::dsp {

namespace {

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

void check_audio(const Signal& audio) {
  if (audio.channels() != 1)
    throw_value("envelope extraction expects single-channel audio, got ",
                audio.channels(), " channels");
  if (audio.samples() == 0) throw_value("empty audio");
}

/// Resample-and-clamp tail shared by both envelope extractors.
Signal finish_envelope(Eigen::VectorXd env, double rate, double out_rate) {
  Signal s = single_channel(std::move(env), rate);
  if (out_rate < rate) s = resample(s, out_rate, 0.4);
  s.data = s.data.cwiseMax(0.0);
  return s;
}

}  // namespace

double erb_hz(double fc_hz) { return 24.7 * (4.37 * fc_hz / 1000.0 + 1.0); }

double erb_rate(double f_hz) {
  return 21.4 * std::log10(1.0 + 0.00437 * f_hz);
}

double erb_rate_inverse(double rate) {
  return (std::pow(10.0, rate / 21.4) - 1.0) / 0.00437;
}

std::vector<double> gammatone_center_frequencies(
    const GammatoneBankSpec& spec) {
  if (spec.n_bands < 1) throw_value("gammatone bank needs >= 1 band");
  if (!(spec.f_lo_hz < spec.f_hi_hz))
    throw_value("gammatone frequency range must be increasing, got ",
                spec.f_lo_hz, " .. ", spec.f_hi_hz);
  if (!(spec.compression > 0.0 && spec.compression <= 1.0))
    throw_value("compression exponent must lie in (0, 1], got ",
                spec.compression);
  const double e_lo = erb_rate(spec.f_lo_hz);
  const double e_hi = erb_rate(spec.f_hi_hz);
  std::vector<double> freqs(static_cast<std::size_t>(spec.n_bands));
  for (int i = 0; i < spec.n_bands; ++i) {
    const double frac =
        spec.n_bands == 1 ? 0.0
                          : static_cast<double>(i) / (spec.n_bands - 1);
    freqs[static_cast<std::size_t>(i)] =
        erb_rate_inverse(e_lo + frac * (e_hi - e_lo));
  }
  return freqs;
}

Signal gammatone_envelope(const Signal& audio, const GammatoneBankSpec& spec,
                          double out_rate) {
  check_audio(audio);
  if (audio.rate < 8000.0)
    throw_value("gammatone envelope expects audio rate >= 8 kHz, got ",
                audio.rate);

  const Eigen::Index n = audio.samples();
  const auto freqs = gammatone_center_frequencies(spec);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);

  for (double fc : freqs) {
    // Cascade of `order` identical complex one-pole resonators. The damping
    // 1.019 * bandwidth maps the gammatone bandwidth parameter onto the ERB
    // of a 4th-order filter; the complex output magnitude is the subband
    // envelope directly.
    const double bw = spec.bandwidth_scale * erb_hz(fc) * 1.019;
    const std::complex<double> pole =
        std::exp(std::complex<double>(-2.0 * M_PI * bw / audio.rate,
                                      2.0 * M_PI * fc / audio.rate));
    // Normalize so a unit tone at fc comes out with unit envelope: one-pole
    // gain at fc is 1/(1 - |pole|), and the analytic pair carries a factor 2.
    const double stage_gain = 1.0 - std::abs(pole);
    const double norm = 2.0 * std::pow(stage_gain, spec.order);

    std::vector<std::complex<double>> state(
        static_cast<std::size_t>(spec.order), {0.0, 0.0});
    for (Eigen::Index t = 0; t < n; ++t) {
      std::complex<double> v(audio.data(0, t), 0.0);
      for (auto& w : state) {
        w = v + pole * w;
        v = w;
      }
      sum[t] += std::pow(std::abs(v) * norm, spec.compression);
    }
  }
  return finish_envelope(std::move(sum), audio.rate, out_rate);
}

Signal hilbert_envelope(const Signal& audio, double lp_cut_hz,
                        double out_rate) {
  check_audio(audio);
  const Eigen::Index n = audio.samples();
  if (n < 4) throw_value("audio too short for a Hilbert envelope: ", n);

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) buf[static_cast<std::size_t>(t)] =
      std::complex<double>(audio.data(0, t), 0.0);

  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan fwd = fftw_plan_dft_1d(
        static_cast<int>(n), reinterpret_cast<fftw_complex*>(buf.data()),
        reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD,
        FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
  }

  // Analytic signal: double positive frequencies, zero negative ones; DC
  // (and the Nyquist bin for even n) stay untouched.
  const Eigen::Index half = n / 2;
  for (Eigen::Index i = 1; i < (n + 1) / 2; ++i)
    buf[static_cast<std::size_t>(i)] *= 2.0;
  for (Eigen::Index i = half + 1; i < n; ++i)
    buf[static_cast<std::size_t>(i)] = 0.0;

  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan inv = fftw_plan_dft_1d(
        static_cast<int>(n), reinterpret_cast<fftw_complex*>(buf.data()),
        reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD,
        FFTW_ESTIMATE);
    fftw_execute(inv);
    fftw_destroy_plan(inv);
  }

  Eigen::VectorXd env(n);
  for (Eigen::Index t = 0; t < n; ++t)
    env[t] = std::abs(buf[static_cast<std::size_t>(t)]) /
             static_cast<double>(n);

  if (lp_cut_hz > 0.0 && lp_cut_hz < audio.rate / 2.0) {
    const int taps = static_cast<int>(
        std::ceil(3.3 * audio.rate / (0.25 * lp_cut_hz)));
    const Eigen::VectorXd h = design_lowpass(lp_cut_hz, audio.rate, taps);
    Eigen::MatrixXd m(1, n);
    m.row(0) = env.transpose();
    env = convolve_same(m, h).row(0).transpose();
  }
  return finish_envelope(std::move(env), audio.rate, out_rate);
}

}  // namespace aad::dsp
