#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "aad/linear/lag.hpp"
#include "aad/linear/lda.hpp"
#include "aad/linear/ridge.hpp"
#include "aad/trial.hpp"

namespace aad::linear {

/// Default 1.25 s of pre-stimulus envelope lags at 64 Hz.
inline constexpr int kDefaultEnvLags = 80;

/// Canonical transform banks; columns ordered by descending canonical
/// correlation. Transformed training components have unit variance and are
/// mutually uncorrelated under the shrunken covariances.
struct CcaModel {
  Eigen::MatrixXd w_x;            // (N*L) x J_max EEG decoders
  Eigen::MatrixXd w_s;            // L_s x J_max envelope encoders
  Eigen::VectorXd correlations;   // descending canonical correlations
  int n_channels = 0;
  int n_lags_eeg = kDefaultEegLags;
  int n_lags_env = kDefaultEnvLags;

  int max_components() const { return static_cast<int>(correlations.size()); }
};

/// Fits CCA between the lagged EEG matrix and lagged envelope matrix via a
/// generalized symmetric eigenproblem on ridge-shrunken covariances
/// (gamma = shrinkage * trace/dim added to each diagonal).
CcaModel cca_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& s,
                 double shrinkage = 1e-6);

/// Convenience: builds aligned lag matrices from concatenated trials (EEG
/// paired with the attended envelope) and fits.
CcaModel cca_fit_trials(const std::vector<const Trial*>& trials,
                        int n_lags_eeg = kDefaultEegLags,
                        int n_lags_env = kDefaultEnvLags,
                        double shrinkage = 1e-6);

/// The J per-component Pearson correlations between projected EEG and
/// projected envelope over one analysis window. Degenerate windows yield
/// zeros.
Eigen::VectorXd cca_features(const CcaModel& model,
                             const Eigen::MatrixXd& eeg_window,
                             const Eigen::VectorXd& env, int j);

/// Difference-feature LDA decision: 1 (stream A) when the classifier accepts
/// features(env_a) - features(env_b).
Stream cca_classify(const CcaModel& model, const LdaClassifier& lda,
                    const Eigen::MatrixXd& eeg_window,
                    const Eigen::VectorXd& env_a, const Eigen::VectorXd& env_b,
                    int j);

/// Difference-feature LDA training set at one window length: each window of
/// each trial contributes the (attended minus unattended) feature row with
/// label 1 and its negation with label 0.
void cca_lda_training_set(const std::vector<const Trial*>& trials,
                          const CcaModel& model, int j,
                          Eigen::Index win_samples, double overlap,
                          Eigen::MatrixXd* features, std::vector<int>* labels);

// ---------------------------------------------------------------------------
// Component-count selection by inner cross-validation.

struct SelectJConfig {
  std::vector<double> window_lengths_s{1.0, 2.0, 5.0, 10.0, 20.0};
  double overlap = 0.5;
  int inner_folds = 4;
  int n_lags_eeg = kDefaultEegLags;
  int n_lags_env = kDefaultEnvLags;
  double shrinkage = 1e-6;
  std::uint64_t seed = 0;
};

/// Inner-CV optimal J per analysis window for one outer fold's training
/// trials (the J_f of the protocol).
std::vector<int> select_j_per_window(const std::vector<const Trial*>& trials,
                                     const SelectJConfig& cfg);

/// Final J for a single fold: the minimum across analysis windows of J_f.
int select_j(const std::vector<const Trial*>& trials, const SelectJConfig& cfg);

/// Aggregates per-fold (and per-subject) J_f vectors: average per window,
/// round half up, then minimum across windows.
int finalize_j(const std::vector<std::vector<int>>& j_per_window_per_fold);

}  // namespace aad::linear
