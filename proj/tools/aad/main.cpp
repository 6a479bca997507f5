// aad: auditory attention decoding toolkit command line.
//
// Subcommands: synth, preprocess, train, eval, mesd, loco, report. Every
// subcommand logs its resolved configuration and seed, and identical
// config + seed produces identical output files regardless of --workers.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "aad/data/dataset.hpp"
#include "aad/data/synth.hpp"
#include "aad/dsp/preprocess.hpp"
#include "aad/errors.hpp"
#include "aad/eval/mesd.hpp"
#include "aad/eval/pipeline.hpp"
#include "aad/eval/stats.hpp"
#include "aad/io/csv.hpp"

namespace {

using aad::io::CsvWriter;

std::vector<double> parse_windows(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw aad::ValueError("empty --windows list");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1])
      throw aad::ValueError("--windows must be positive ascending");
  if (out.front() <= 0.0)
    throw aad::ValueError("--windows must be positive ascending");
  return out;
}

void log_kv(const std::string& key, const std::string& value) {
  std::cout << "[config] " << key << " = " << value << "\n";
}

struct CommonOpts {
  std::uint64_t seed = 0;
  int workers = 0;
  std::string method = "lsr";
  std::string mode = "ss";
  std::string windows = "1,2,5,10,20,40";
  std::vector<std::string> subjects;
  std::vector<int> folds;
};

void add_common(CLI::App* cmd, CommonOpts* c, bool with_method = true) {
  cmd->add_option("--seed", c->seed, "Random seed")->envname("AAD_SEED");
  cmd->add_option("--workers", c->workers,
                  "Worker threads (0 = hardware); never changes results")
      ->envname("AAD_WORKERS");
  if (with_method) {
    cmd->add_option("--method", c->method, "Decoding method")
        ->check(CLI::IsMember({"lsr", "cca", "aadnet"}))
        ->envname("AAD_METHOD");
    cmd->add_option("--mode", c->mode, "Evaluation regime")
        ->check(CLI::IsMember({"ss", "si"}))
        ->envname("AAD_MODE");
    cmd->add_option("--windows", c->windows,
                    "Analysis window lengths, seconds (comma separated)")
        ->envname("AAD_WINDOWS");
    cmd->add_option("--subjects", c->subjects,
                    "Restrict to these subject ids")
        ->delimiter(',')
        ->envname("AAD_SUBJECTS");
    cmd->add_option("--folds", c->folds, "Restrict to these fold indices")
        ->delimiter(',')
        ->envname("AAD_FOLDS");
  }
}

void add_train_opts(CLI::App* cmd, aad::net::TrainConfig* t) {
  cmd->add_option("--lr", t->lr, "Learning rate")->envname("AAD_LR");
  cmd->add_option("--batch-size", t->batch_size, "Batch size")
      ->envname("AAD_BATCH_SIZE");
  cmd->add_option("--weight-decay", t->weight_decay, "AdamW weight decay")
      ->envname("AAD_WEIGHT_DECAY");
  cmd->add_option("--dropout", t->dropout, "Dropout rate")
      ->envname("AAD_DROPOUT");
  cmd->add_option("--hidden", t->hidden, "FC1 output size h (0 = direct)")
      ->envname("AAD_HIDDEN");
  cmd->add_option("--max-epochs", t->max_epochs, "Epoch cap")
      ->envname("AAD_MAX_EPOCHS");
  cmd->add_option("--patience", t->patience,
                  "Early-stop patience (consecutive epochs)")
      ->envname("AAD_PATIENCE");
  cmd->add_option("--train-window", t->train_window_s,
                  "Training window length, seconds")
      ->envname("AAD_TRAIN_WINDOW");
  cmd->add_option("--finetune-scale", t->finetune_lr_scale,
                  "Fine-tune learning-rate scale")
      ->envname("AAD_FINETUNE_SCALE");
}

aad::eval::EvalOptions make_eval_options(const CommonOpts& c,
                                         const aad::net::TrainConfig& t) {
  aad::eval::EvalOptions opt;
  opt.method = aad::eval::parse_method(c.method);
  opt.mode = aad::eval::parse_mode(c.mode);
  opt.window_lengths_s = parse_windows(c.windows);
  opt.seed = c.seed;
  opt.workers = c.workers;
  opt.train = t;
  opt.subjects = c.subjects;
  opt.fold_filter = c.folds;
  log_kv("method", c.method);
  log_kv("mode", c.mode);
  log_kv("windows", c.windows);
  log_kv("seed", std::to_string(c.seed));
  return opt;
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& out_dir, const aad::data::SynthConfig& cfg) {
  log_kv("seed", std::to_string(cfg.seed));
  log_kv("subjects", std::to_string(cfg.n_subjects));
  log_kv("trials", std::to_string(cfg.trials_per_subject));
  log_kv("channels", std::to_string(cfg.n_channels));
  log_kv("informative",
         cfg.n_informative < 0 ? "all" : std::to_string(cfg.n_informative));
  const aad::data::Dataset ds = aad::data::synth_generate(cfg);
  aad::data::save_dataset(ds, out_dir);
  aad::data::export_metadata_csv(ds, std::string(out_dir) + "/trials.csv");
  std::cout << "wrote dataset with " << ds.trial_count() << " trials to "
            << out_dir << "\n";
  return 0;
}

int cmd_preprocess(const std::string& in_dir, const std::string& out_dir,
                   const std::string& envelope, std::uint64_t seed) {
  log_kv("envelope", envelope);
  log_kv("seed", std::to_string(seed));
  aad::dsp::PreprocessConfig pc;
  pc.envelope = envelope == "hilbert" ? aad::dsp::EnvelopeMethod::kHilbert
                                      : aad::dsp::EnvelopeMethod::kGammatone;
  aad::data::Dataset ds = aad::data::load_dataset(in_dir);
  for (auto& subject : ds.subjects) {
    for (auto& rec : subject.trials) {
      aad::dsp::Signal eeg(rec.eeg, rec.eeg_rate, ds.channel_labels);
      Eigen::MatrixXd wave_a(1, rec.env_a.size());
      wave_a.row(0) = rec.env_a.transpose();
      Eigen::MatrixXd wave_b(1, rec.env_b.size());
      wave_b.row(0) = rec.env_b.transpose();
      const aad::Trial t = aad::dsp::preprocess_trial(
          eeg, aad::dsp::Signal(wave_a, rec.audio_rate),
          aad::dsp::Signal(wave_b, rec.audio_rate), rec.attended, pc);
      rec.eeg = t.eeg;
      rec.env_a = t.env_a;
      rec.env_b = t.env_b;
      rec.eeg_rate = pc.out_rate;
      rec.audio_rate = pc.out_rate;
      rec.duration_s = static_cast<double>(t.samples()) / pc.out_rate;
      rec.eeg_file.clear();
      rec.env_a_file.clear();
      rec.env_b_file.clear();
    }
  }
  aad::data::save_dataset(ds, out_dir);
  std::cout << "wrote preprocessed dataset to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& dataset_dir, const std::string& out_dir,
              const CommonOpts& c, const aad::net::TrainConfig& t) {
  auto opt = make_eval_options(c, t);
  opt.checkpoint_dir = out_dir;
  const aad::data::Dataset ds = aad::data::load_dataset(dataset_dir);
  aad::eval::train_models(ds, opt);
  std::cout << "wrote checkpoints to " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& dataset_dir, const std::string& out_csv,
             const std::string& checkpoints, const CommonOpts& c,
             const aad::net::TrainConfig& t) {
  auto opt = make_eval_options(c, t);
  if (!checkpoints.empty()) opt.checkpoint_dir = checkpoints;
  const aad::data::Dataset ds = aad::data::load_dataset(dataset_dir);
  const auto report = aad::eval::run_evaluation(ds, opt);
  aad::eval::write_eval_csv(report, out_csv);
  std::cout << "wrote " << report.rows.size() << " report rows to " << out_csv
            << "\n";
  return 0;
}

int cmd_mesd(const std::string& report_csv, const std::string& out_csv,
             const aad::eval::MesdConfig& mc) {
  const auto report = aad::eval::read_eval_csv(report_csv);

  // Per (method, subject): fold-averaged accuracy per window length.
  std::map<std::pair<std::string, std::string>,
           std::map<double, std::pair<double, int>>>
      curves;
  for (const auto& row : report.rows) {
    if (!row.valid) continue;
    auto& cell = curves[{row.method, row.subject}][row.window_s];
    cell.first += row.accuracy;
    cell.second += 1;
  }

  CsvWriter csv(out_csv, {"method", "subject", "mesd_s", "tau_opt_s",
                          "censored"});
  for (const auto& [key, curve] : curves) {
    std::vector<aad::eval::AccuracyPoint> points;
    for (const auto& [w, cell] : curve)
      points.push_back({w, cell.first / cell.second});
    if (points.size() < 2) {
      csv.row({key.first, key.second, "NA", "NA", "1"});
      continue;
    }
    const auto r = aad::eval::mesd(points, mc);
    csv.row({key.first, key.second,
             std::isfinite(r.mesd_s) ? CsvWriter::num(r.mesd_s) : "NA",
             std::isfinite(r.tau_opt_s) ? CsvWriter::num(r.tau_opt_s) : "NA",
             r.censored ? "1" : "0"});
  }
  std::cout << "wrote MESD table to " << out_csv << "\n";
  return 0;
}

int cmd_loco(const std::string& dataset_dir, const std::string& out_csv,
             double window_s, const CommonOpts& c,
             const aad::net::TrainConfig& t) {
  CommonOpts c2 = c;
  c2.windows = CsvWriter::num(window_s);
  auto opt = make_eval_options(c2, t);
  const aad::data::Dataset ds = aad::data::load_dataset(dataset_dir);
  const auto importance = aad::eval::loco_channel_importance(ds, opt);
  CsvWriter csv(out_csv, {"channel_label", "accuracy_drop"});
  for (const auto& ci : importance)
    csv.row({ci.channel_label, CsvWriter::num(ci.accuracy_drop)});
  std::cout << "wrote channel importance for " << importance.size()
            << " channels to " << out_csv << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs,
               const std::string& out_csv, const std::string& tests_csv,
               int n_perm, std::uint64_t seed) {
  // Merge evaluation reports; summarize per (window, method) across
  // subjects; never drop a cell silently.
  std::vector<aad::eval::EvalRow> rows;
  for (const auto& path : inputs) {
    const auto r = aad::eval::read_eval_csv(path);
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  }

  // subject -> method -> window -> fold-mean accuracy
  std::map<std::string, std::map<std::string, std::map<double, double>>> acc;
  std::set<std::string> methods;
  std::set<double> windows;
  std::set<std::string> subjects;
  {
    std::map<std::tuple<std::string, std::string, double>,
             std::pair<double, int>>
        sums;
    for (const auto& row : rows) {
      methods.insert(row.method);
      windows.insert(row.window_s);
      subjects.insert(row.subject);
      if (!row.valid) continue;
      auto& cell = sums[{row.subject, row.method, row.window_s}];
      cell.first += row.accuracy;
      cell.second += 1;
    }
    for (const auto& [key, cell] : sums)
      acc[std::get<0>(key)][std::get<1>(key)][std::get<2>(key)] =
          cell.first / cell.second;
  }

  CsvWriter csv(out_csv, {"window_s", "method", "n_subjects", "mean_accuracy",
                          "median_accuracy", "std_accuracy"});
  for (double w : windows) {
    for (const auto& m : methods) {
      std::vector<double> values;
      for (const auto& s : subjects) {
        const auto mit = acc.find(s);
        if (mit == acc.end()) continue;
        const auto wit = mit->second.find(m);
        if (wit == mit->second.end()) continue;
        const auto vit = wit->second.find(w);
        if (vit != wit->second.end()) values.push_back(vit->second);
      }
      if (values.empty()) {
        csv.row({CsvWriter::num(w), m, "0", "NA", "NA", "NA"});
        continue;
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      var = values.size() > 1 ? var / static_cast<double>(values.size() - 1)
                              : 0.0;
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      const double median =
          sorted.size() % 2 == 1
              ? sorted[sorted.size() / 2]
              : 0.5 * (sorted[sorted.size() / 2 - 1] +
                       sorted[sorted.size() / 2]);
      csv.row({CsvWriter::num(w), m,
               CsvWriter::num(static_cast<std::int64_t>(values.size())),
               CsvWriter::num(mean), CsvWriter::num(median),
               CsvWriter::num(std::sqrt(var))});
    }
  }

  // Pairwise paired permutation tests with Bonferroni over method pairs.
  if (!tests_csv.empty() && methods.size() >= 2) {
    CsvWriter tcsv(tests_csv, {"window_s", "method_a", "method_b",
                               "n_subjects", "p_value", "p_bonferroni"});
    const std::vector<std::string> ms(methods.begin(), methods.end());
    const int n_pairs =
        static_cast<int>(ms.size() * (ms.size() - 1) / 2);
    for (double w : windows) {
      for (std::size_t i = 0; i < ms.size(); ++i) {
        for (std::size_t j = i + 1; j < ms.size(); ++j) {
          std::vector<double> a, b;
          for (const auto& s : subjects) {
            const auto mit = acc.find(s);
            if (mit == acc.end()) continue;
            const auto ai = mit->second.find(ms[i]);
            const auto bi = mit->second.find(ms[j]);
            if (ai == mit->second.end() || bi == mit->second.end()) continue;
            const auto av = ai->second.find(w);
            const auto bv = bi->second.find(w);
            if (av == ai->second.end() || bv == bi->second.end()) continue;
            a.push_back(av->second);
            b.push_back(bv->second);
          }
          if (a.empty()) {
            tcsv.row({CsvWriter::num(w), ms[i], ms[j], "0", "NA", "NA"});
            continue;
          }
          const double p =
              aad::eval::paired_permutation_test(a, b, n_perm, seed);
          tcsv.row({CsvWriter::num(w), ms[i], ms[j],
                    CsvWriter::num(static_cast<std::int64_t>(a.size())),
                    CsvWriter::num(p),
                    CsvWriter::num(aad::eval::bonferroni({p}, n_pairs)[0])});
        }
      }
    }
  }
  std::cout << "wrote summary to " << out_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Envelope-based auditory attention decoding toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a config file");

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  aad::data::SynthConfig sc;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output dataset directory")
      ->required()
      ->envname("AAD_OUT");
  synth->add_option("--seed", sc.seed, "Random seed")->envname("AAD_SEED");
  synth->add_option("--subjects", sc.n_subjects, "Number of subjects")
      ->envname("AAD_SUBJECTS");
  synth->add_option("--trials", sc.trials_per_subject, "Trials per subject")
      ->envname("AAD_TRIALS");
  synth->add_option("--trial-s", sc.trial_s, "Trial length, seconds")
      ->envname("AAD_TRIAL_S");
  synth->add_option("--channels", sc.n_channels, "EEG channels")
      ->envname("AAD_CHANNELS");
  synth->add_option("--informative", sc.n_informative,
                    "Informative channels (-1 = all, 0 = null dataset)")
      ->envname("AAD_INFORMATIVE");
  synth->add_option("--trf-length", sc.trf_length, "TRF kernel taps")
      ->envname("AAD_TRF_LENGTH");
  synth->add_option("--gain", sc.attended_gain, "Attended-to-EEG gain")
      ->envname("AAD_GAIN");
  synth->add_option("--leakage", sc.leakage_gain, "Unattended leakage gain")
      ->envname("AAD_LEAKAGE");
  synth->add_option("--noise", sc.noise_std, "EEG noise std")
      ->envname("AAD_NOISE");
  synth->add_option("--kernel-jitter", sc.subject_kernel_jitter,
                    "Per-subject kernel variation in [0, 1]")
      ->envname("AAD_KERNEL_JITTER");
  synth->add_flag("--share-stimuli,!--no-share-stimuli",
                  sc.share_stimuli_across_subjects,
                  "Reuse stimulus ids across subjects");
  synth->add_option("--name", sc.name, "Dataset name")
      ->envname("AAD_NAME");

  // preprocess ---------------------------------------------------------------
  auto* prep = app.add_subcommand(
      "preprocess", "Filter, resample and extract envelopes for a dataset");
  std::string prep_in, prep_out, prep_env = "gammatone";
  std::uint64_t prep_seed = 0;
  prep->add_option("--in", prep_in, "Input dataset directory")
      ->required()
      ->envname("AAD_IN");
  prep->add_option("--out", prep_out, "Output dataset directory")
      ->required()
      ->envname("AAD_OUT");
  prep->add_option("--envelope", prep_env, "Envelope method")
      ->check(CLI::IsMember({"gammatone", "hilbert"}))
      ->envname("AAD_ENVELOPE");
  prep->add_option("--seed", prep_seed, "Random seed (logged only)")
      ->envname("AAD_SEED");

  // train --------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Fit models, one checkpoint per fold");
  std::string train_dataset, train_out;
  CommonOpts train_c;
  aad::net::TrainConfig train_t;
  train->add_option("--dataset", train_dataset, "Dataset directory")
      ->required()
      ->envname("AAD_DATASET");
  train->add_option("--out", train_out, "Checkpoint directory")
      ->required()
      ->envname("AAD_OUT");
  add_common(train, &train_c);
  add_train_opts(train, &train_t);

  // eval ---------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Cross-validated windowed accuracy");
  std::string eval_dataset, eval_out, eval_ckpt;
  CommonOpts eval_c;
  aad::net::TrainConfig eval_t;
  eval->add_option("--dataset", eval_dataset, "Dataset directory")
      ->required()
      ->envname("AAD_DATASET");
  eval->add_option("--out", eval_out, "Report CSV path")
      ->required()
      ->envname("AAD_OUT");
  eval->add_option("--checkpoints", eval_ckpt,
                   "Reuse aadnet checkpoints from this directory")
      ->envname("AAD_CHECKPOINTS");
  add_common(eval, &eval_c);
  add_train_opts(eval, &eval_t);

  // mesd ---------------------------------------------------------------------
  auto* mesd = app.add_subcommand("mesd",
                                  "Minimal expected switch duration per subject");
  std::string mesd_report, mesd_out;
  aad::eval::MesdConfig mc;
  mesd->add_option("--report", mesd_report, "Evaluation report CSV")
      ->required()
      ->envname("AAD_REPORT");
  mesd->add_option("--out", mesd_out, "MESD CSV path")
      ->required()
      ->envname("AAD_OUT");
  mesd->add_option("--comfort", mc.comfort_gain, "Comfort gain level")
      ->envname("AAD_COMFORT");
  mesd->add_option("--confidence", mc.confidence,
                   "Stationary comfort-mass requirement")
      ->envname("AAD_CONFIDENCE");
  mesd->add_option("--kmax", mc.k_max, "Largest state count searched")
      ->envname("AAD_KMAX");

  // loco ---------------------------------------------------------------------
  auto* loco = app.add_subcommand(
      "loco", "Leave-one-channel-out accuracy drop per channel");
  std::string loco_dataset, loco_out;
  double loco_window = 20.0;
  CommonOpts loco_c;
  aad::net::TrainConfig loco_t;
  loco->add_option("--dataset", loco_dataset, "Dataset directory")
      ->required()
      ->envname("AAD_DATASET");
  loco->add_option("--out", loco_out, "Channel-importance CSV path")
      ->required()
      ->envname("AAD_OUT");
  loco->add_option("--window", loco_window, "Analysis window, seconds")
      ->envname("AAD_WINDOW");
  add_common(loco, &loco_c);
  add_train_opts(loco, &loco_t);

  // report -------------------------------------------------------------------
  auto* report = app.add_subcommand(
      "report", "Merge evaluation CSVs into a per-window method comparison");
  std::vector<std::string> report_in;
  std::string report_out, report_tests;
  int report_nperm = 10000;
  std::uint64_t report_seed = 0;
  report->add_option("--in", report_in, "Evaluation report CSVs")
      ->required()
      ->expected(-1);
  report->add_option("--out", report_out, "Summary CSV path")
      ->required()
      ->envname("AAD_OUT");
  report->add_option("--tests", report_tests,
                     "Also write pairwise permutation tests to this CSV")
      ->envname("AAD_TESTS");
  report->add_option("--n-perm", report_nperm, "Permutation count")
      ->envname("AAD_N_PERM");
  report->add_option("--seed", report_seed, "Permutation seed")
      ->envname("AAD_SEED");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_out, sc);
    if (prep->parsed()) return cmd_preprocess(prep_in, prep_out, prep_env,
                                              prep_seed);
    if (train->parsed()) return cmd_train(train_dataset, train_out, train_c,
                                          train_t);
    if (eval->parsed()) return cmd_eval(eval_dataset, eval_out, eval_ckpt,
                                        eval_c, eval_t);
    if (mesd->parsed()) return cmd_mesd(mesd_report, mesd_out, mc);
    if (loco->parsed()) return cmd_loco(loco_dataset, loco_out, loco_window,
                                        loco_c, loco_t);
    if (report->parsed()) return cmd_report(report_in, report_out,
                                            report_tests, report_nperm,
                                            report_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand given\n";
  return 1;
}
