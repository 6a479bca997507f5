#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aad/data/dataset.hpp"
#include "aad/eval/folds.hpp"
#include "aad/net/train.hpp"

namespace aad::eval {

enum class Method { kLsr, kCca, kAadnet };
enum class Mode { kSubjectSpecific, kSubjectIndependent };

const char* method_name(Method m);
const char* mode_name(Mode m);
Method parse_method(const std::string& s);
Mode parse_mode(const std::string& s);

struct EvalOptions {
  Method method = Method::kLsr;
  Mode mode = Mode::kSubjectSpecific;
  std::vector<double> window_lengths_s{1, 2, 5, 10, 20, 40};
  double overlap = 0.5;
  int folds = 8;
  std::uint64_t seed = 0;
  int workers = 0;
  net::TrainConfig train;  // aadnet hyperparameters
  /// Restrict evaluation to these subject ids / fold indices (empty = all).
  std::vector<std::string> subjects;
  std::vector<int> fold_filter;
  /// Channels to keep (empty = all); EEG is re-referenced to the kept set.
  std::vector<int> channel_subset;
  /// Where aadnet checkpoints are written (train) / looked up (eval).
  std::optional<std::filesystem::path> checkpoint_dir;
};

/// One row of the evaluation report (per subject, fold, window length).
struct EvalRow {
  std::string method;
  std::string subject;
  int fold = 0;
  double window_s = 0.0;
  std::int64_t n_windows = 0;   // decisions actually scored
  double accuracy = 0.0;
  double chance = 0.0;          // from non-overlapping window count
  bool valid = true;            // false when the window cannot be evaluated
};

struct EvalReport {
  std::vector<EvalRow> rows;

  /// Mean accuracy across folds per (subject, window); invalid rows skipped.
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>
  per_subject_curves() const;
};

/// Runs the full cross-validation protocol of the chosen method over the
/// dataset and scores windowed decisions on every test fold. Identical
/// options and seed give identical reports for any worker count.
EvalReport run_evaluation(const data::Dataset& dataset,
                          const EvalOptions& options);

/// Fits models for every selected (subject, fold) plan and writes one
/// checkpoint per fold into options.checkpoint_dir (required). aadnet also
/// writes a training-log CSV per run.
void train_models(const data::Dataset& dataset, const EvalOptions& options);

void write_eval_csv(const EvalReport& report,
                    const std::filesystem::path& path);
EvalReport read_eval_csv(const std::filesystem::path& path);

/// Leave-one-channel-out importance: accuracy drop (baseline minus reduced)
/// when each channel is removed and the EEG re-referenced to the remaining
/// channels. Evaluated at options.window_lengths_s.front().
struct ChannelImportance {
  std::string channel_label;
  double accuracy_drop = 0.0;
};

std::vector<ChannelImportance> loco_channel_importance(
    const data::Dataset& dataset, const EvalOptions& options);

}  // namespace aad::eval
