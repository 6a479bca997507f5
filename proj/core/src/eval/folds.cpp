#include "aad/eval/folds.hpp"

#include <algorithm>
#include <unordered_set>

#include "aad/errors.hpp"
#include "aad/rng.hpp"

namespace aad::eval {

namespace {

/// Deals `items` into `folds` near-equal groups, round-robin after a seeded
/// shuffle.
std::vector<std::vector<TrialRef>> deal_folds(std::vector<TrialRef> items,
                                              int folds, RandomStream& rng) {
  rng.shuffle(items);
  std::vector<std::vector<TrialRef>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < items.size(); ++i)
    out[i % static_cast<std::size_t>(folds)].push_back(std::move(items[i]));
  return out;
}

/// 4:1 train/validation split on a trial basis.
void split_train_val(std::vector<TrialRef> pool, RandomStream& rng,
                     std::vector<TrialRef>* train,
                     std::vector<TrialRef>* val) {
  rng.shuffle(pool);
  const auto n_val = static_cast<std::size_t>(
      std::llround(static_cast<double>(pool.size()) / 5.0));
  val->assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_val));
  train->assign(pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());
}

}  // namespace

std::vector<FoldPlan> split_ss(const std::vector<TrialRef>& subject_trials,
                               int folds, std::uint64_t seed) {
  if (folds < 2) throw_value("split_ss: need >= 2 folds, got ", folds);
  if (static_cast<int>(subject_trials.size()) < folds)
    throw_value("split_ss: ", subject_trials.size(),
                " trials cannot fill ", folds, " folds");

  RandomStream rng(derive_seed(seed, 0xf01d5));
  auto fold_groups = deal_folds(subject_trials, folds, rng);

  std::vector<FoldPlan> plans;
  plans.reserve(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    FoldPlan plan;
    plan.fold = f;
    plan.test = fold_groups[static_cast<std::size_t>(f)];
    std::vector<TrialRef> rest;
    for (int g = 0; g < folds; ++g)
      if (g != f)
        rest.insert(rest.end(), fold_groups[static_cast<std::size_t>(g)].begin(),
                    fold_groups[static_cast<std::size_t>(g)].end());
    RandomStream fold_rng(derive_seed(seed, 0x7a11 + static_cast<std::uint64_t>(f)));
    split_train_val(std::move(rest), fold_rng, &plan.train, &plan.validation);
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<FoldPlan> split_si_cross_trial(
    const std::vector<std::vector<TrialRef>>& subjects,
    std::size_t test_subject_index, int folds, std::uint64_t seed) {
  if (subjects.size() < 2)
    throw_value("split_si_cross_trial: need >= 2 subjects, got ",
                subjects.size());
  if (test_subject_index >= subjects.size())
    throw_value("split_si_cross_trial: test subject index ",
                test_subject_index, " out of range");
  if (folds < 1) throw_value("split_si_cross_trial: need >= 1 fold");
  const auto& test_trials = subjects[test_subject_index];
  if (static_cast<int>(test_trials.size()) < folds)
    throw_value("split_si_cross_trial: test subject has ", test_trials.size(),
                " trials for ", folds, " folds");

  RandomStream rng(derive_seed(seed, 0x510f01d));
  auto fold_groups = deal_folds(test_trials, folds, rng);

  std::vector<FoldPlan> plans;
  plans.reserve(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    FoldPlan plan;
    plan.fold = f;
    plan.test = fold_groups[static_cast<std::size_t>(f)];

    std::unordered_set<std::string> excluded;
    for (const auto& ref : plan.test) excluded.insert(ref.attended_stimulus_id);

    std::vector<TrialRef> pool;
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      if (s == test_subject_index) continue;
      for (const auto& ref : subjects[s])
        if (excluded.count(ref.attended_stimulus_id) == 0)
          pool.push_back(ref);
    }
    if (pool.empty())
      throw_value("split_si_cross_trial: stimulus filtering emptied the ",
                  "training pool for fold ", f);

    RandomStream fold_rng(
        derive_seed(seed, 0x51a11 + static_cast<std::uint64_t>(f)));
    split_train_val(std::move(pool), fold_rng, &plan.train, &plan.validation);
    plans.push_back(std::move(plan));
  }
  return plans;
}

bool stimulus_leakage_free(const FoldPlan& plan) {
  std::unordered_set<std::string> test_ids;
  for (const auto& ref : plan.test) test_ids.insert(ref.attended_stimulus_id);
  for (const auto& ref : plan.train)
    if (test_ids.count(ref.attended_stimulus_id)) return false;
  for (const auto& ref : plan.validation)
    if (test_ids.count(ref.attended_stimulus_id)) return false;
  return true;
}

}  // namespace aad::eval
