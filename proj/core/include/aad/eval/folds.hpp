#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aad::eval {

/// Lightweight handle onto one trial of a corpus.
struct TrialRef {
  std::string subject_id;
  std::string trial_id;
  std::string attended_stimulus_id;

  bool operator==(const TrialRef&) const = default;
};

struct FoldPlan {
  int fold = 0;
  std::vector<TrialRef> train;
  std::vector<TrialRef> validation;
  std::vector<TrialRef> test;
};

/// Subject-specific split: trials shuffled and dealt into `folds` test folds;
/// per plan the remaining trials split 4:1 into train and validation, all on
/// a trial basis. Every trial lands in exactly one test fold.
std::vector<FoldPlan> split_ss(const std::vector<TrialRef>& subject_trials,
                               int folds, std::uint64_t seed);

/// Cross-trial leave-one-subject-out split: the test subject's trials form
/// `folds` test folds (the non-test folds of that subject stay unused); the
/// other subjects' trials are kept only when their attended stimulus id does
/// not occur as an attended stimulus id in the test fold, then pooled and
/// split 4:1 into train and validation.
std::vector<FoldPlan> split_si_cross_trial(
    const std::vector<std::vector<TrialRef>>& subjects,
    std::size_t test_subject_index, int folds, std::uint64_t seed);

/// Hard assertion helper: true iff no attended stimulus id occurs both in
/// test and in train+validation.
bool stimulus_leakage_free(const FoldPlan& plan);

}  // namespace aad::eval
