#include "aad/dsp/filters.hpp"

#include <cmath>
#include <numeric>

namespace aad::dsp {

namespace {

double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  return std::sin(M_PI * x) / (M_PI * x);
}

int force_odd(int taps) { return taps % 2 == 0 ? taps + 1 : taps; }

}  // namespace

Eigen::VectorXd design_lowpass(double cutoff_hz, double rate, int taps) {
  if (cutoff_hz <= 0.0 || cutoff_hz >= rate / 2.0)
    throw_value("low-pass cutoff ", cutoff_hz, " Hz outside (0, ", rate / 2.0,
                ") at rate ", rate);
  taps = force_odd(taps);
  const int mid = (taps - 1) / 2;
  const double fc = cutoff_hz / rate;
  Eigen::VectorXd h(taps);
  for (int n = 0; n < taps; ++n) {
    const double window =
        0.54 - 0.46 * std::cos(2.0 * M_PI * n / (taps - 1));
    h[n] = 2.0 * fc * sinc(2.0 * fc * (n - mid)) * window;
  }
  h /= h.sum();  // unit DC gain
  return h;
}

Eigen::VectorXd design_bandpass(double lo_hz, double hi_hz, double rate,
                                int taps) {
  if (!(lo_hz < hi_hz))
    throw_value("band-pass needs lo < hi, got ", lo_hz, " and ", hi_hz);
  Eigen::VectorXd h =
      design_lowpass(hi_hz, rate, taps) - design_lowpass(lo_hz, rate, taps);
  h.array() -= h.mean();  // exact null at DC
  return h;
}

Eigen::MatrixXd convolve_same(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& taps, EdgeMode edges) {
  const Eigen::Index n = x.cols();
  const Eigen::Index k = taps.size();
  const Eigen::Index mid = (k - 1) / 2;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), n);
  for (Eigen::Index ch = 0; ch < x.rows(); ++ch) {
    for (Eigen::Index kk = 0; kk < k; ++kk) {
      const double w = taps[kk];
      if (w == 0.0) continue;
      const Eigen::Index off = kk - mid;  // y[t] += w * x[t + off]
      const Eigen::Index t0 = std::max<Eigen::Index>(0, -off);
      const Eigen::Index t1 = std::min<Eigen::Index>(n, n - off);
      if (t1 > t0)
        y.row(ch).segment(t0, t1 - t0) +=
            w * x.row(ch).segment(t0 + off, t1 - t0);
      if (edges == EdgeMode::kReflectOdd) {
        const double left = x(ch, 0), right = x(ch, n - 1);
        for (Eigen::Index t = 0; t < t0; ++t) {
          const Eigen::Index src = -(t + off);  // mirror of t + off < 0
          y(ch, t) += w * (2.0 * left -
                           x(ch, std::min<Eigen::Index>(src, n - 1)));
        }
        for (Eigen::Index t = std::max<Eigen::Index>(t1, 0); t < n; ++t) {
          const Eigen::Index src = 2 * (n - 1) - (t + off);
          y(ch, t) += w * (2.0 * right -
                           x(ch, std::max<Eigen::Index>(src, 0)));
        }
      }
    }
  }
  return y;
}

Signal fir_bandpass_zero_phase(const Signal& in, double lo_hz, double hi_hz) {
  if (!(lo_hz < hi_hz && hi_hz < in.rate / 2.0))
    throw_value("band edges must satisfy lo < hi < rate/2; got lo=", lo_hz,
                ", hi=", hi_hz, ", rate=", in.rate);
  const int taps = force_odd(static_cast<int>(std::ceil(3.0 * in.rate / lo_hz)));
  const Eigen::Index min_len = 3 * static_cast<Eigen::Index>(taps);
  if (in.samples() <= min_len)
    throw_value("signal too short for zero-phase band-pass: need more than ",
                min_len, " samples (3x filter length), got ", in.samples());
  const Eigen::VectorXd h = design_bandpass(lo_hz, hi_hz, in.rate, taps);
  // h is symmetric, so the time-reversed pass equals a second centered pass.
  // Odd reflection at the edges keeps start/end transients down.
  Eigen::MatrixXd y =
      convolve_same(convolve_same(in.data, h, EdgeMode::kReflectOdd), h,
                    EdgeMode::kReflectOdd);
  return Signal(std::move(y), in.rate, in.labels);
}

Signal resample(const Signal& in, double target_rate, double cutoff_scale) {
  if (target_rate <= 0.0)
    throw_value("resample target rate must be positive, got ", target_rate);
  if (target_rate > in.rate)
    throw_value("resample only supports target <= source rate, got ",
                target_rate, " > ", in.rate);
  if (target_rate == in.rate) return in;
  const auto src = static_cast<long long>(std::llround(in.rate));
  const auto dst = static_cast<long long>(std::llround(target_rate));
  if (std::fabs(in.rate - static_cast<double>(src)) > 1e-9 ||
      std::fabs(target_rate - static_cast<double>(dst)) > 1e-9)
    throw_value("resample requires integer-valued rates, got ", in.rate,
                " -> ", target_rate);

  const long long g = std::gcd(src, dst);
  const long long up = dst / g;    // P
  const long long down = src / g;  // Q
  const double f_up = in.rate * static_cast<double>(up);
  const double f_min = std::min(in.rate, target_rate);
  const double transition = 0.1 * f_min;
  int taps = force_odd(static_cast<int>(std::ceil(3.3 * f_up / transition)));
  Eigen::VectorXd h = design_lowpass(cutoff_scale * f_min, f_up, taps);
  h *= static_cast<double>(up);  // compensate zero stuffing

  const Eigen::Index n_in = in.samples();
  const auto n_out = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(n_in) * target_rate / in.rate));
  const Eigen::Index mid = (taps - 1) / 2;

  Eigen::MatrixXd y(in.channels(), n_out);
  for (Eigen::Index m = 0; m < n_out; ++m) {
    const long long u = m * down;  // position on the upsampled grid
    // Taps hitting actual input samples: u + k - mid  ==  0 (mod up).
    long long k0 = (mid - u) % up;
    if (k0 < 0) k0 += up;
    for (Eigen::Index ch = 0; ch < in.channels(); ++ch) {
      double acc = 0.0;
      for (long long k = k0; k < taps; k += up) {
        long long j = (u + k - mid) / up;
        // Odd reflection beyond the edges.
        bool reflected = false;
        double anchor = 0.0;
        if (j < 0) {
          anchor = in.data(ch, 0);
          j = std::min<long long>(-j, n_in - 1);
          reflected = true;
        } else if (j >= n_in) {
          anchor = in.data(ch, n_in - 1);
          j = std::max<long long>(2 * (n_in - 1) - j, 0);
          reflected = true;
        }
        const double sample = in.data(ch, static_cast<Eigen::Index>(j));
        acc += h[static_cast<Eigen::Index>(k)] *
               (reflected ? 2.0 * anchor - sample : sample);
      }
      y(ch, m) = acc;
    }
  }
  return Signal(std::move(y), target_rate, in.labels);
}

Signal rereference_and_center(const Signal& eeg) {
  if (eeg.channels() < 2)
    throw_value("re-referencing needs at least 2 channels, got ",
                eeg.channels());
  Eigen::MatrixXd y = eeg.data;
  y.rowwise() -= y.colwise().mean();  // common average reference per sample
  y.colwise() -= y.rowwise().mean();  // zero temporal mean per channel
  return Signal(std::move(y), eeg.rate, eeg.labels);
}

}  // namespace aad::dsp
