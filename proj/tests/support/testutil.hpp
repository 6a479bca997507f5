#pragma once

// Shared oracle helpers for the test suites. Everything here is kept
// independent of the library's signal paths so the tests can act as
// external references.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "aad/rng.hpp"

namespace testutil {

inline Eigen::VectorXd tone(double freq_hz, double rate, Eigen::Index n,
                            double amplitude = 1.0, double phase = 0.0) {
  Eigen::VectorXd x(n);
  for (Eigen::Index t = 0; t < n; ++t)
    x[t] = amplitude *
           std::sin(2.0 * M_PI * freq_hz * static_cast<double>(t) / rate +
                    phase);
  return x;
}

/// Single-frequency amplitude by direct correlation with the quadrature
/// pair (an independent one-bin DFT).
inline double dft_amplitude(const Eigen::VectorXd& x, double rate,
                            double freq_hz) {
  const Eigen::Index n = x.size();
  double re = 0.0, im = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double w = 2.0 * M_PI * freq_hz * static_cast<double>(t) / rate;
    re += x[t] * std::cos(w);
    im += x[t] * std::sin(w);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(n);
}

/// Frequency of the largest amplitude on a scan grid.
inline double dominant_frequency(const Eigen::VectorXd& x, double rate,
                                 double f_lo, double f_hi, double df) {
  double best_f = f_lo, best_a = -1.0;
  for (double f = f_lo; f <= f_hi + 1e-12; f += df) {
    const double a = dft_amplitude(x, rate, f);
    if (a > best_a) {
      best_a = a;
      best_f = f;
    }
  }
  return best_f;
}

inline Eigen::VectorXd randn_vector(Eigen::Index n, aad::RandomStream& rng) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
  return x;
}

inline Eigen::MatrixXd randn_matrix(Eigen::Index r, Eigen::Index c,
                                    aad::RandomStream& rng) {
  Eigen::MatrixXd x(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) x(i, j) = rng.normal();
  return x;
}

/// Two-pass textbook Pearson correlation (reference formula).
inline double pearson_reference(const Eigen::VectorXd& a,
                                const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  double num = 0.0, da = 0.0, db = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace testutil
