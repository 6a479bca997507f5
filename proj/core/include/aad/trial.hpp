#pragma once

#include <Eigen/Dense>
#include <string>

namespace aad {

enum class Stream { kA, kB };

inline const char* stream_name(Stream s) { return s == Stream::kA ? "a" : "b"; }

/// One recording unit: preprocessed EEG, the two competing envelopes, and
/// the attended-stream label, all at a common sample rate.
struct Trial {
  std::string subject_id;
  std::string trial_id;
  Eigen::MatrixXd eeg;    // channels x samples
  Eigen::VectorXd env_a;  // samples
  Eigen::VectorXd env_b;  // samples
  Stream attended = Stream::kA;
  std::string stimulus_a;  // stimulus id of stream a
  std::string stimulus_b;
  double rate = 64.0;  // Hz, shared by all three streams

  Eigen::Index samples() const { return eeg.cols(); }
  Eigen::Index channels() const { return eeg.rows(); }
  const Eigen::VectorXd& attended_env() const {
    return attended == Stream::kA ? env_a : env_b;
  }
  const Eigen::VectorXd& unattended_env() const {
    return attended == Stream::kA ? env_b : env_a;
  }
  const std::string& attended_stimulus() const {
    return attended == Stream::kA ? stimulus_a : stimulus_b;
  }
};

}  // namespace aad
