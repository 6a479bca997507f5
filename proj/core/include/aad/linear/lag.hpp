#pragma once

#include <Eigen/Dense>

#include "aad/errors.hpp"

namespace aad::linear {

enum class LagOrientation {
  kAnticausal,  // row t holds x(t + tau); EEG follows the stimulus
  kCausal       // row t holds s(t - tau); envelope history
};

/// Time-lagged design matrix. Row r corresponds to trial time t0 + r; only
/// rows whose every entry is a real sample are kept.
struct LagMatrix {
  Eigen::MatrixXd x;  // rows x (n_channels * n_lags)
  int n_channels = 0;
  int n_lags = 0;
  Eigen::Index t0 = 0;
  LagOrientation orientation = LagOrientation::kAnticausal;
};

/// eeg: channels x samples. Column layout: channel-major, lag-minor
/// (column = n * L + tau).
LagMatrix build_lag_matrix(const Eigen::MatrixXd& eeg, int n_lags,
                           LagOrientation orientation =
                               LagOrientation::kAnticausal);

LagMatrix build_envelope_lag_matrix(const Eigen::VectorXd& env, int n_lags);

/// EEG (anticausal, L lags) and envelope (causal, L_s lags) matrices trimmed
/// to the common valid time range, ready for CCA.
struct CcaMatrices {
  Eigen::MatrixXd x;  // T' x (N*L)
  Eigen::MatrixXd s;  // T' x L_s
};

CcaMatrices build_cca_matrices(const Eigen::MatrixXd& eeg,
                               const Eigen::VectorXd& env, int n_lags_eeg,
                               int n_lags_env);

}  // namespace aad::linear
