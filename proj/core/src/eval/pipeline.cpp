#include "aad/eval/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "aad/dsp/filters.hpp"
#include "aad/eval/stats.hpp"
#include "aad/eval/windows.hpp"
#include "aad/io/csv.hpp"
#include "aad/linear/cca.hpp"
#include "aad/linear/ridge.hpp"
#include "aad/linear/serialize.hpp"
#include "aad/rng.hpp"

namespace aad::eval {

const char* method_name(Method m) {
  switch (m) {
    case Method::kLsr: return "lsr";
    case Method::kCca: return "cca";
    case Method::kAadnet: return "aadnet";
  }
  return "?";
}

const char* mode_name(Mode m) {
  return m == Mode::kSubjectSpecific ? "ss" : "si";
}

Method parse_method(const std::string& s) {
  if (s == "lsr") return Method::kLsr;
  if (s == "cca") return Method::kCca;
  if (s == "aadnet") return Method::kAadnet;
  throw_value("unknown method '", s, "' (expected lsr, cca, or aadnet)");
}

Mode parse_mode(const std::string& s) {
  if (s == "ss") return Mode::kSubjectSpecific;
  if (s == "si") return Mode::kSubjectIndependent;
  throw_value("unknown mode '", s, "' (expected ss or si)");
}

namespace {

// ---------------------------------------------------------------------------
// Corpus: dataset trials converted, channel-subset and re-referenced.

struct Corpus {
  std::vector<Trial> trials;
  std::vector<std::vector<TrialRef>> refs_by_subject;
  std::vector<std::string> subject_ids;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  double rate = 64.0;

  const Trial& get(const TrialRef& ref) const {
    const auto it = index.find({ref.subject_id, ref.trial_id});
    if (it == index.end())
      throw_value("corpus: unknown trial ", ref.subject_id, "/", ref.trial_id);
    return trials[it->second];
  }

  std::vector<const Trial*> get_all(const std::vector<TrialRef>& refs) const {
    std::vector<const Trial*> out;
    out.reserve(refs.size());
    for (const auto& r : refs) out.push_back(&get(r));
    return out;
  }
};

Corpus build_corpus(const data::Dataset& ds,
                    const std::vector<int>& channel_subset) {
  Corpus corpus;
  for (const auto& subject : ds.subjects) {
    corpus.subject_ids.push_back(subject.subject_id);
    std::vector<TrialRef> refs;
    for (const auto& rec : subject.trials) {
      Trial t = data::to_trial(subject, rec);
      if (!channel_subset.empty()) {
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(channel_subset.size()),
                            t.eeg.cols());
        for (std::size_t i = 0; i < channel_subset.size(); ++i) {
          const int ch = channel_subset[i];
          if (ch < 0 || ch >= t.eeg.rows())
            throw_value("channel index ", ch, " outside [0, ", t.eeg.rows(),
                        ")");
          sub.row(static_cast<Eigen::Index>(i)) = t.eeg.row(ch);
        }
        t.eeg = std::move(sub);
      }
      // Common average reference over the kept channels, then zero-centering.
      t.eeg = dsp::rereference_and_center(dsp::Signal(t.eeg, t.rate)).data;
      corpus.rate = t.rate;
      refs.push_back({subject.subject_id, t.trial_id, t.attended_stimulus()});
      corpus.index[{subject.subject_id, t.trial_id}] = corpus.trials.size();
      corpus.trials.push_back(std::move(t));
    }
    corpus.refs_by_subject.push_back(std::move(refs));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Windowed scoring.

struct WindowScore {
  std::int64_t correct = 0;
  std::int64_t total = 0;
  std::int64_t nonoverlapping = 0;
  bool valid = true;
};

/// classify(eeg window, env_a window, env_b window, window length index).
using Classifier = std::function<Stream(
    const Eigen::MatrixXd&, const Eigen::VectorXd&, const Eigen::VectorXd&,
    std::size_t)>;

std::vector<WindowScore> score_test_fold(
    const Corpus& corpus, const std::vector<TrialRef>& test_refs,
    const EvalOptions& opt, const std::vector<bool>& window_valid,
    const Classifier& classify) {
  std::vector<WindowScore> scores(opt.window_lengths_s.size());
  for (std::size_t wi = 0; wi < opt.window_lengths_s.size(); ++wi) {
    if (!window_valid[wi]) {
      scores[wi].valid = false;
      continue;
    }
    const auto win = static_cast<Eigen::Index>(
        std::llround(opt.window_lengths_s[wi] * corpus.rate));
    for (const auto& ref : test_refs) {
      const Trial& t = corpus.get(ref);
      scores[wi].nonoverlapping += count_nonoverlapping(t.samples(), win);
      for (const auto& w : make_windows(t.samples(), win, opt.overlap)) {
        const Eigen::MatrixXd eeg = t.eeg.middleCols(w.start, w.length);
        const Eigen::VectorXd env_a = t.env_a.segment(w.start, w.length);
        const Eigen::VectorXd env_b = t.env_b.segment(w.start, w.length);
        const Stream choice = classify(eeg, env_a, env_b, wi);
        if (choice == t.attended) ++scores[wi].correct;
        ++scores[wi].total;
      }
    }
    if (scores[wi].total == 0 || scores[wi].nonoverlapping == 0)
      scores[wi].valid = false;
  }
  return scores;
}

void append_rows(const EvalOptions& opt, const std::string& subject, int fold,
                 const std::vector<WindowScore>& scores,
                 std::vector<EvalRow>* rows) {
  for (std::size_t wi = 0; wi < scores.size(); ++wi) {
    EvalRow row;
    row.method = method_name(opt.method);
    row.subject = subject;
    row.fold = fold;
    row.window_s = opt.window_lengths_s[wi];
    row.valid = scores[wi].valid;
    if (scores[wi].valid) {
      row.n_windows = scores[wi].total;
      row.accuracy = static_cast<double>(scores[wi].correct) /
                     static_cast<double>(scores[wi].total);
      row.chance =
          chance_level(static_cast<int>(scores[wi].nonoverlapping));
    }
    rows->push_back(std::move(row));
  }
}

bool subject_selected(const EvalOptions& opt, const std::string& id) {
  if (opt.subjects.empty()) return true;
  return std::find(opt.subjects.begin(), opt.subjects.end(), id) !=
         opt.subjects.end();
}

bool fold_selected(const EvalOptions& opt, int fold) {
  if (opt.fold_filter.empty()) return true;
  return std::find(opt.fold_filter.begin(), opt.fold_filter.end(), fold) !=
         opt.fold_filter.end();
}

std::vector<TrialRef> concat_refs(const std::vector<TrialRef>& a,
                                  const std::vector<TrialRef>& b) {
  std::vector<TrialRef> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// ---------------------------------------------------------------------------
// Per-method fold evaluation.

/// Shared per-trial Gram cache for the ridge lambda search.
class GramCache {
 public:
  GramCache(const Corpus& corpus, int n_lags)
      : corpus_(corpus), n_lags_(n_lags), cache_(corpus.trials.size()) {}

  std::vector<const linear::TrialGram*> get(
      const std::vector<const Trial*>& trials) {
    std::vector<const linear::TrialGram*> out;
    out.reserve(trials.size());
    for (const Trial* t : trials) {
      const auto idx = static_cast<std::size_t>(t - corpus_.trials.data());
      if (!cache_[idx].has_value())
        cache_[idx] = linear::trial_gram(*t, n_lags_);
      out.push_back(&*cache_[idx]);
    }
    return out;
  }

 private:
  const Corpus& corpus_;
  int n_lags_;
  std::vector<std::optional<linear::TrialGram>> cache_;
};

std::vector<WindowScore> eval_fold_lsr(const Corpus& corpus,
                                       const FoldPlan& plan,
                                       const EvalOptions& opt,
                                       GramCache* grams) {
  const auto fit_refs = concat_refs(plan.train, plan.validation);
  const auto fit_trials = corpus.get_all(fit_refs);
  const auto gram_ptrs = grams->get(fit_trials);
  const auto cv = linear::ridge_cv_fit(fit_trials, linear::kDefaultEegLags,
                                       &gram_ptrs);

  std::vector<bool> valid(opt.window_lengths_s.size(), false);
  for (std::size_t wi = 0; wi < valid.size(); ++wi) {
    const auto win = static_cast<Eigen::Index>(
        std::llround(opt.window_lengths_s[wi] * corpus.rate));
    valid[wi] = win > linear::kDefaultEegLags;
  }
  return score_test_fold(
      corpus, plan.test, opt, valid,
      [&](const Eigen::MatrixXd& eeg, const Eigen::VectorXd& a,
          const Eigen::VectorXd& b, std::size_t) {
        return linear::lsr_classify(cv.decoder, eeg, a, b).choice;
      });
}

struct CcaFoldModel {
  linear::CcaModel model;
  std::vector<int> j_per_window;  // inner-CV J_f per analysis window
};

CcaFoldModel fit_cca_fold(const Corpus& corpus, const FoldPlan& plan,
                          const EvalOptions& opt, std::uint64_t fold_seed) {
  CcaFoldModel out;
  const auto fit_trials =
      corpus.get_all(concat_refs(plan.train, plan.validation));
  out.model = linear::cca_fit_trials(fit_trials);

  linear::SelectJConfig jc;
  jc.window_lengths_s.clear();
  for (double w : opt.window_lengths_s) {
    const auto win = static_cast<Eigen::Index>(std::llround(w * corpus.rate));
    if (win >= linear::kDefaultEegLags + linear::kDefaultEnvLags + 1)
      jc.window_lengths_s.push_back(w);
  }
  jc.overlap = opt.overlap;
  jc.seed = fold_seed;
  out.j_per_window = jc.window_lengths_s.empty()
                         ? std::vector<int>{}
                         : linear::select_j_per_window(fit_trials, jc);
  return out;
}

std::vector<WindowScore> eval_fold_cca(const Corpus& corpus,
                                       const FoldPlan& plan,
                                       const EvalOptions& opt,
                                       const CcaFoldModel& fold_model, int j) {
  const auto fit_trials =
      corpus.get_all(concat_refs(plan.train, plan.validation));

  std::vector<bool> valid(opt.window_lengths_s.size(), false);
  std::vector<std::optional<linear::LdaClassifier>> lda_per_window(
      opt.window_lengths_s.size());
  for (std::size_t wi = 0; wi < valid.size(); ++wi) {
    const auto win = static_cast<Eigen::Index>(
        std::llround(opt.window_lengths_s[wi] * corpus.rate));
    if (win < linear::kDefaultEegLags + linear::kDefaultEnvLags + 1)
      continue;  // window cannot populate both lag matrices
    Eigen::MatrixXd feats;
    std::vector<int> labels;
    linear::cca_lda_training_set(fit_trials, fold_model.model, j, win,
                                 opt.overlap, &feats, &labels);
    if (feats.rows() == 0) continue;
    lda_per_window[wi] = linear::lda_fit(feats, labels);
    valid[wi] = true;
  }
  return score_test_fold(
      corpus, plan.test, opt, valid,
      [&](const Eigen::MatrixXd& eeg, const Eigen::VectorXd& a,
          const Eigen::VectorXd& b, std::size_t wi) {
        return linear::cca_classify(fold_model.model, *lda_per_window[wi],
                                    eeg, a, b, j);
      });
}

// ---------------------------------------------------------------------------
// AADNet fold training.

std::vector<net::TrainSample> windows_for(const Corpus& corpus,
                                          const std::vector<TrialRef>& refs,
                                          double window_s) {
  return net::make_training_windows(corpus.get_all(refs), window_s);
}

net::AadnetModel train_aadnet(const Corpus& corpus, const FoldPlan& plan,
                              const EvalOptions& opt,
                              const std::string& tag, std::uint64_t seed) {
  const std::filesystem::path ckpt_path =
      opt.checkpoint_dir.has_value() ? *opt.checkpoint_dir / (tag + ".ckpt")
                                     : std::filesystem::path{};
  if (opt.checkpoint_dir.has_value() && std::filesystem::exists(ckpt_path))
    return net::AadnetModel::from_checkpoint(io::Checkpoint::load(ckpt_path));

  net::AadnetConfig net_cfg;
  net_cfg.n_eeg_channels =
      static_cast<int>(corpus.get(plan.train.front()).eeg.rows());
  net_cfg.hidden = opt.train.hidden;
  net_cfg.dropout_rate = opt.train.dropout;
  net::AadnetModel model(net_cfg);
  model.init_params(derive_seed(seed, 0x1217));

  net::TrainConfig cfg = opt.train;
  cfg.seed = derive_seed(seed, 0x7a41);
  cfg.workers = opt.workers;
  const auto train_set = windows_for(corpus, plan.train, cfg.train_window_s);
  const auto val_set =
      windows_for(corpus, plan.validation, cfg.train_window_s);
  const auto result = net::train(model, train_set, val_set, cfg);

  if (opt.checkpoint_dir.has_value()) {
    std::filesystem::create_directories(*opt.checkpoint_dir);
    model.to_checkpoint().save(ckpt_path);
    net::write_training_log(*opt.checkpoint_dir / (tag + "_log.csv"),
                            result.log);
    // Score with the quantized parameters, so a rerun that picks up the
    // cached checkpoint reproduces this run bit for bit.
    return net::AadnetModel::from_checkpoint(io::Checkpoint::load(ckpt_path));
  }
  return model;
}

net::AadnetModel finetune_aadnet(net::AadnetModel model, const Corpus& corpus,
                                 const FoldPlan& plan, const EvalOptions& opt,
                                 const std::string& tag, std::uint64_t seed) {
  const std::filesystem::path ckpt_path =
      opt.checkpoint_dir.has_value() ? *opt.checkpoint_dir / (tag + ".ckpt")
                                     : std::filesystem::path{};
  if (opt.checkpoint_dir.has_value() && std::filesystem::exists(ckpt_path))
    return net::AadnetModel::from_checkpoint(io::Checkpoint::load(ckpt_path));

  net::TrainConfig cfg = opt.train;
  cfg.seed = derive_seed(seed, 0xf1e7);
  cfg.workers = opt.workers;
  const auto train_set = windows_for(corpus, plan.train, cfg.train_window_s);
  const auto val_set =
      windows_for(corpus, plan.validation, cfg.train_window_s);
  const auto result = net::finetune_ss(model, train_set, val_set, cfg);

  if (opt.checkpoint_dir.has_value()) {
    std::filesystem::create_directories(*opt.checkpoint_dir);
    model.to_checkpoint().save(ckpt_path);
    net::write_training_log(*opt.checkpoint_dir / (tag + "_log.csv"),
                            result.log);
    return net::AadnetModel::from_checkpoint(io::Checkpoint::load(ckpt_path));
  }
  return model;
}

std::vector<WindowScore> eval_fold_aadnet(const Corpus& corpus,
                                          const FoldPlan& plan,
                                          const EvalOptions& opt,
                                          const net::AadnetModel& model) {
  std::vector<bool> valid(opt.window_lengths_s.size(), false);
  for (std::size_t wi = 0; wi < valid.size(); ++wi) {
    const auto win = static_cast<Eigen::Index>(
        std::llround(opt.window_lengths_s[wi] * corpus.rate));
    valid[wi] = win >= 64;
  }
  return score_test_fold(
      corpus, plan.test, opt, valid,
      [&](const Eigen::MatrixXd& eeg, const Eigen::VectorXd& a,
          const Eigen::VectorXd& b, std::size_t) {
        const Eigen::Vector2d p = model.forward_eval(eeg, a, b);
        return p[1] > p[0] ? Stream::kB : Stream::kA;
      });
}

std::uint64_t subject_fold_seed(const EvalOptions& opt, std::size_t subject,
                                int fold) {
  return derive_seed(opt.seed,
                     0x100000u + subject * 1000u + static_cast<unsigned>(fold));
}

}  // namespace

// ---------------------------------------------------------------------------

EvalReport run_evaluation(const data::Dataset& dataset,
                          const EvalOptions& opt) {
  if (dataset.subjects.empty()) throw_value("run_evaluation: empty dataset");
  const Corpus corpus = build_corpus(dataset, opt.channel_subset);
  EvalReport report;

  GramCache grams(corpus, linear::kDefaultEegLags);

  // Fold plans per subject (SS: own trials; SI: cross-trial LOSO).
  std::vector<std::vector<FoldPlan>> plans(corpus.subject_ids.size());
  for (std::size_t s = 0; s < corpus.subject_ids.size(); ++s) {
    if (!subject_selected(opt, corpus.subject_ids[s])) continue;
    plans[s] = opt.mode == Mode::kSubjectSpecific
                   ? split_ss(corpus.refs_by_subject[s], opt.folds,
                              derive_seed(opt.seed, 0x55 + s))
                   : split_si_cross_trial(corpus.refs_by_subject, s,
                                          opt.folds,
                                          derive_seed(opt.seed, 0x51 + s));
  }

  // CCA needs a first pass over folds to settle J (per subject for SS, grand
  // average for SI) before the scored pass.
  std::map<std::size_t, std::vector<CcaFoldModel>> cca_models;
  std::map<std::size_t, int> cca_j;
  if (opt.method == Method::kCca) {
    std::vector<std::vector<int>> all_jf;
    for (std::size_t s = 0; s < plans.size(); ++s) {
      if (plans[s].empty()) continue;
      std::vector<std::vector<int>> subject_jf;
      auto& models = cca_models[s];
      for (const auto& plan : plans[s]) {
        if (!fold_selected(opt, plan.fold)) {
          models.emplace_back();
          continue;
        }
        models.push_back(
            fit_cca_fold(corpus, plan, opt,
                         subject_fold_seed(opt, s, plan.fold)));
        if (!models.back().j_per_window.empty())
          subject_jf.push_back(models.back().j_per_window);
      }
      if (subject_jf.empty())
        throw_value("cca: no analysis window is long enough for the lag ",
                    "matrices; add windows of at least ",
                    (linear::kDefaultEegLags + linear::kDefaultEnvLags + 1) /
                        corpus.rate,
                    " s");
      if (opt.mode == Mode::kSubjectSpecific) {
        cca_j[s] = linear::finalize_j(subject_jf);
      } else {
        all_jf.insert(all_jf.end(), subject_jf.begin(), subject_jf.end());
      }
    }
    if (opt.mode == Mode::kSubjectIndependent) {
      const int grand_j = linear::finalize_j(all_jf);
      for (auto& [s, _] : cca_models) cca_j[s] = grand_j;
    }
  }

  for (std::size_t s = 0; s < plans.size(); ++s) {
    if (plans[s].empty()) continue;
    const std::string& subject = corpus.subject_ids[s];
    for (const auto& plan : plans[s]) {
      if (!fold_selected(opt, plan.fold)) continue;
      const std::uint64_t seed = subject_fold_seed(opt, s, plan.fold);
      std::vector<WindowScore> scores;
      switch (opt.method) {
        case Method::kLsr:
          scores = eval_fold_lsr(corpus, plan, opt, &grams);
          break;
        case Method::kCca:
          scores = eval_fold_cca(
              corpus, plan, opt,
              cca_models.at(s)[static_cast<std::size_t>(plan.fold)],
              cca_j.at(s));
          break;
        case Method::kAadnet: {
          if (opt.mode == Mode::kSubjectIndependent) {
            const net::AadnetModel model = train_aadnet(
                corpus, plan, opt,
                format_msg("aadnet_si_", subject, "_f", plan.fold), seed);
            scores = eval_fold_aadnet(corpus, plan, opt, model);
          } else {
            // SS protocol: pretrain the SI model for this subject and fold,
            // then fine-tune on the subject's own training material.
            const auto si_plans = split_si_cross_trial(
                corpus.refs_by_subject, s, opt.folds,
                derive_seed(opt.seed, 0x51 + s));
            net::AadnetModel si_model = train_aadnet(
                corpus, si_plans[static_cast<std::size_t>(plan.fold)], opt,
                format_msg("aadnet_si_", subject, "_f", plan.fold), seed);
            const net::AadnetModel model = finetune_aadnet(
                std::move(si_model), corpus, plan, opt,
                format_msg("aadnet_ss_", subject, "_f", plan.fold), seed);
            scores = eval_fold_aadnet(corpus, plan, opt, model);
          }
          break;
        }
      }
      append_rows(opt, subject, plan.fold, scores, &report.rows);
    }
  }
  return report;
}

void train_models(const data::Dataset& dataset, const EvalOptions& opt) {
  if (!opt.checkpoint_dir.has_value())
    throw_value("train_models: checkpoint directory required");
  std::filesystem::create_directories(*opt.checkpoint_dir);
  const Corpus corpus = build_corpus(dataset, opt.channel_subset);
  GramCache grams(corpus, linear::kDefaultEegLags);

  for (std::size_t s = 0; s < corpus.subject_ids.size(); ++s) {
    const std::string& subject = corpus.subject_ids[s];
    if (!subject_selected(opt, subject)) continue;
    const auto plans =
        opt.mode == Mode::kSubjectSpecific
            ? split_ss(corpus.refs_by_subject[s], opt.folds,
                       derive_seed(opt.seed, 0x55 + s))
            : split_si_cross_trial(corpus.refs_by_subject, s, opt.folds,
                                   derive_seed(opt.seed, 0x51 + s));
    for (const auto& plan : plans) {
      if (!fold_selected(opt, plan.fold)) continue;
      const std::uint64_t seed = subject_fold_seed(opt, s, plan.fold);
      const std::string tag =
          format_msg(method_name(opt.method), "_", mode_name(opt.mode), "_",
                     subject, "_f", plan.fold);
      switch (opt.method) {
        case Method::kLsr: {
          const auto fit_trials =
              corpus.get_all(concat_refs(plan.train, plan.validation));
          const auto gram_ptrs = grams.get(fit_trials);
          const auto cv = linear::ridge_cv_fit(
              fit_trials, linear::kDefaultEegLags, &gram_ptrs);
          linear::ridge_to_checkpoint(cv.decoder)
              .save(*opt.checkpoint_dir / (tag + ".ckpt"));
          break;
        }
        case Method::kCca: {
          const auto fm = fit_cca_fold(corpus, plan, opt, seed);
          linear::CcaBundle bundle;
          bundle.model = fm.model;
          bundle.j = fm.j_per_window.empty()
                         ? 1
                         : *std::min_element(fm.j_per_window.begin(),
                                             fm.j_per_window.end());
          linear::cca_to_checkpoint(bundle).save(*opt.checkpoint_dir /
                                                 (tag + ".ckpt"));
          break;
        }
        case Method::kAadnet: {
          if (opt.mode == Mode::kSubjectIndependent) {
            train_aadnet(corpus, plan, opt,
                         format_msg("aadnet_si_", subject, "_f", plan.fold),
                         seed);
          } else {
            const auto si_plans = split_si_cross_trial(
                corpus.refs_by_subject, s, opt.folds,
                derive_seed(opt.seed, 0x51 + s));
            net::AadnetModel si_model = train_aadnet(
                corpus, si_plans[static_cast<std::size_t>(plan.fold)], opt,
                format_msg("aadnet_si_", subject, "_f", plan.fold), seed);
            finetune_aadnet(std::move(si_model), corpus, plan, opt,
                            format_msg("aadnet_ss_", subject, "_f", plan.fold),
                            seed);
          }
          break;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>
EvalReport::per_subject_curves() const {
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (const auto& row : rows) {
    if (!row.valid) continue;
    auto& cell = acc[row.subject][row.window_s];
    cell.first += row.accuracy;
    cell.second += 1;
  }
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>
      out;
  for (const auto& [subject, curve] : acc) {
    std::vector<std::pair<double, double>> points;
    for (const auto& [w, cell] : curve)
      points.emplace_back(w, cell.first / cell.second);
    out.emplace_back(subject, std::move(points));
  }
  return out;
}

void write_eval_csv(const EvalReport& report,
                    const std::filesystem::path& path) {
  io::CsvWriter csv(path, {"method", "subject", "fold", "window_s",
                           "n_windows", "accuracy", "chance"});
  for (const auto& row : report.rows) {
    csv.row({row.method, row.subject,
             io::CsvWriter::num(static_cast<std::int64_t>(row.fold)),
             io::CsvWriter::num(row.window_s),
             row.valid ? io::CsvWriter::num(row.n_windows) : "NA",
             row.valid ? io::CsvWriter::num(row.accuracy) : "NA",
             row.valid ? io::CsvWriter::num(row.chance) : "NA"});
  }
}

EvalReport read_eval_csv(const std::filesystem::path& path) {
  const io::CsvTable table = io::read_csv(path);
  const std::size_t c_method = table.column("method");
  const std::size_t c_subject = table.column("subject");
  const std::size_t c_fold = table.column("fold");
  const std::size_t c_window = table.column("window_s");
  const std::size_t c_n = table.column("n_windows");
  const std::size_t c_acc = table.column("accuracy");
  const std::size_t c_chance = table.column("chance");

  EvalReport report;
  for (const auto& cells : table.rows) {
    EvalRow row;
    row.method = cells.at(c_method);
    row.subject = cells.at(c_subject);
    row.fold = std::stoi(cells.at(c_fold));
    row.window_s = std::stod(cells.at(c_window));
    if (cells.at(c_acc) == "NA") {
      row.valid = false;
    } else {
      row.n_windows = std::stoll(cells.at(c_n));
      row.accuracy = std::stod(cells.at(c_acc));
      row.chance = std::stod(cells.at(c_chance));
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<ChannelImportance> loco_channel_importance(
    const data::Dataset& dataset, const EvalOptions& options) {
  if (dataset.subjects.empty() || dataset.subjects[0].trials.empty())
    throw_value("loco: empty dataset");
  const auto n_channels =
      static_cast<int>(dataset.subjects[0].trials[0].eeg.rows());
  if (n_channels < 3)
    throw_value("loco: need >= 3 channels so the reduced montage can be ",
                "re-referenced, got ", n_channels);

  auto mean_accuracy = [](const EvalReport& report) {
    double sum = 0.0;
    int n = 0;
    for (const auto& row : report.rows) {
      if (!row.valid) continue;
      sum += row.accuracy;
      ++n;
    }
    if (n == 0) throw_value("loco: no valid evaluation rows");
    return sum / n;
  };

  EvalOptions opt = options;
  opt.window_lengths_s = {options.window_lengths_s.front()};
  const double baseline = mean_accuracy(run_evaluation(dataset, opt));

  std::vector<ChannelImportance> out;
  for (int ch = 0; ch < n_channels; ++ch) {
    EvalOptions reduced = opt;
    reduced.channel_subset.clear();
    for (int keep = 0; keep < n_channels; ++keep)
      if (keep != ch) reduced.channel_subset.push_back(keep);
    const double acc = mean_accuracy(run_evaluation(dataset, reduced));
    ChannelImportance ci;
    ci.channel_label =
        static_cast<std::size_t>(ch) < dataset.channel_labels.size()
            ? dataset.channel_labels[static_cast<std::size_t>(ch)]
            : "ch" + std::to_string(ch);
    ci.accuracy_drop = baseline - acc;
    out.push_back(std::move(ci));
  }
  return out;
}

}  // namespace aad::eval
