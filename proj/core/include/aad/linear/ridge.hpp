#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aad/linear/lag.hpp"
#include "aad/linear/pearson.hpp"
#include "aad/trial.hpp"

namespace aad::linear {

/// Default 0-250 ms post-stimulus lag window at 64 Hz, both endpoints on the
/// sample grid.
inline constexpr int kDefaultEegLags = 17;

struct RidgeDecoder {
  Eigen::VectorXd g;  // n_channels * n_lags coefficients
  double lambda = 0.0;
  int n_channels = 0;
  int n_lags = kDefaultEegLags;
};

/// Solves (X^T X + lambda I) g = X^T s with a stable decomposition plus one
/// refinement step. Raises on singular systems at lambda = 0.
RidgeDecoder ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& s,
                       double lambda);

/// The 13-point log grid 1e-2, 1e-1, ..., 1e10.
std::vector<double> ridge_lambda_grid();

/// Per-trial sufficient statistics for the lagged regression of the attended
/// envelope onto EEG.
struct TrialGram {
  Eigen::MatrixXd gram;  // X^T X
  Eigen::VectorXd xty;   // X^T s
  Eigen::Index rows = 0;
};

TrialGram trial_gram(const Trial& trial, int n_lags);

struct RidgeCvResult {
  RidgeDecoder decoder;
  std::vector<double> grid;
  std::vector<double> mean_correlation;  // held-out score per grid lambda
};

/// Leave-one-trial-out selection of lambda over the log grid, scored by
/// held-out reconstruction correlation, then a refit on all trials at the
/// winner. Ties resolve to the smaller lambda. Precomputed grams may be
/// passed to avoid rebuilding them across folds.
RidgeCvResult ridge_cv_fit(const std::vector<const Trial*>& trials,
                           int n_lags = kDefaultEegLags,
                           const std::vector<const TrialGram*>* grams = nullptr);

struct LsrDecision {
  Stream choice = Stream::kA;
  double r_a = 0.0;
  double r_b = 0.0;
  bool degenerate = false;
};

/// Reconstructs the envelope from the EEG window and picks the stream with
/// the higher Pearson correlation; exact ties fall back to stream A with the
/// degenerate flag set.
LsrDecision lsr_classify(const RidgeDecoder& decoder,
                         const Eigen::MatrixXd& eeg_window,
                         const Eigen::VectorXd& env_a,
                         const Eigen::VectorXd& env_b);

}  // namespace aad::linear
