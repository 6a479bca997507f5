#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "aad/trial.hpp"

namespace aad::data {

/// One trial's metadata plus loaded arrays. Before preprocessing the env
/// slots hold raw audio waveforms at audio_rate; afterwards they hold
/// envelopes and both rates agree.
struct TrialRecord {
  std::string trial_id;
  std::string eeg_file;
  std::string env_a_file;
  std::string env_b_file;
  Stream attended = Stream::kA;
  std::string stimulus_a;
  std::string stimulus_b;
  std::string attended_stimulus;  // must equal the attended stream's id
  double eeg_rate = 0.0;
  double audio_rate = 0.0;
  double duration_s = 0.0;

  Eigen::MatrixXd eeg;    // channels x samples
  Eigen::VectorXd env_a;  // samples (waveform or envelope)
  Eigen::VectorXd env_b;
};

struct SubjectData {
  std::string subject_id;
  std::vector<TrialRecord> trials;
};

struct Dataset {
  std::string name;
  int format_version = 1;
  std::vector<std::string> channel_labels;
  std::vector<SubjectData> subjects;

  std::size_t trial_count() const {
    std::size_t n = 0;
    for (const auto& s : subjects) n += s.trials.size();
    return n;
  }
};

/// Writes manifest.json plus one array file per EEG/envelope record. The
/// directory is created if needed; arrays quantize to float32.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Loads and fully validates a dataset directory; structured errors name the
/// offending subject/trial.
Dataset load_dataset(const std::filesystem::path& dir);

/// All invariant violations of the on-disk dataset (empty means valid).
/// Raises only when the manifest itself is unreadable.
std::vector<std::string> validate_manifest(const std::filesystem::path& dir);

/// Conversion to the evaluation-time trial (requires matching rates).
Trial to_trial(const SubjectData& subject, const TrialRecord& rec);

/// Trial metadata CSV: (subject, trial, attended, stimulus_a, stimulus_b,
/// eeg_rate, audio_rate, duration_s).
void export_metadata_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace aad::data
