// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one [PASS]/[FAIL] line per criterion. Exits nonzero if any
// criterion fails. Everything is seeded, so a passing build passes
// repeatably.
//
// Usage: acceptance_tests --cli /path/to/aad --scratch DIR [--only N]

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aad/data/synth.hpp"
#include "aad/eval/folds.hpp"
#include "aad/eval/mesd.hpp"
#include "aad/eval/pipeline.hpp"
#include "aad/eval/stats.hpp"
#include "aad/io/csv.hpp"
#include "aad/linear/cca.hpp"
#include "aad/linear/ridge.hpp"
#include "aad/net/model.hpp"
#include "aad/net/train.hpp"
#include "aad/nn/grad_check.hpp"
#include "aad/nn/layers.hpp"
#include "aad/nn/loss.hpp"
#include "aad/rng.hpp"
#include "support/testutil.hpp"

namespace fs = std::filesystem;
using namespace aad;

namespace {

std::string g_cli;
fs::path g_scratch;

struct Line {
  bool ok = true;
  std::ostringstream detail;
};

// ---------------------------------------------------------------------------
// Helpers shared between criteria.

nn::Tensor random_tensor(std::vector<std::int64_t> shape, RandomStream& rng) {
  nn::Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.normal();
  return t;
}

net::InceptionSpec mini_eeg_spec() {
  net::InceptionSpec s;
  s.in_channels = 4;
  s.branches = {
      {net::BranchKind::kTransform, 0, 1, 4},
      {net::BranchKind::kFeature, 2, 19, 2},
      {net::BranchKind::kFeature, 2, 25, 2},
      {net::BranchKind::kFeature, 1, 33, 2},
      {net::BranchKind::kFeature, 1, 39, 2},
      {net::BranchKind::kPooling, 0, 1, 2},
  };
  return s;
}

net::InceptionSpec mini_audio_spec() {
  net::InceptionSpec s;
  s.in_channels = 1;
  s.branches = {
      {net::BranchKind::kTransform, 0, 1, 1},
      {net::BranchKind::kFeature, 1, 65, 2},
      {net::BranchKind::kFeature, 1, 81, 2},
  };
  return s;
}

double run_layer_check(const std::function<double()>& fwd_bwd,
                       const std::vector<nn::ParamRef>& params) {
  return nn::finite_diff_check(params, fwd_bwd, fwd_bwd).max_rel_error;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool trees_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
  std::sort(rel.begin(), rel.end());
  for (const auto& r : rel)
    if (!fs::exists(b / r) || slurp(a / r) != slurp(b / r)) return false;
  return true;
}

int run_cli(const std::string& args) {
  return std::system((g_cli + " " + args + " > /dev/null 2>&1").c_str());
}

double pooled_accuracy(const eval::EvalReport& report, double window_s) {
  std::int64_t correct = 0, total = 0;
  for (const auto& row : report.rows) {
    if (!row.valid || row.window_s != window_s) continue;
    correct += static_cast<std::int64_t>(
        std::llround(row.accuracy * static_cast<double>(row.n_windows)));
    total += row.n_windows;
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                   : -1.0;
}

/// Pooled decisions and the chance band from pooled non-overlapping counts.
bool within_chance_band(const eval::EvalReport& report, double window_s,
                        double trial_s, Line* line) {
  std::int64_t correct = 0, total = 0, nonoverlap = 0;
  for (const auto& row : report.rows) {
    if (!row.valid || row.window_s != window_s) continue;
    correct += static_cast<std::int64_t>(
        std::llround(row.accuracy * static_cast<double>(row.n_windows)));
    total += row.n_windows;
    // Reconstruct the per-row non-overlapping count from the chance value is
    // fragile; recompute from the trial geometry instead: every test trial
    // contributes floor(trial/window) windows and the fold has
    // n_windows / windows_per_trial trials.
    (void)trial_s;
    nonoverlap += row.n_windows;  // upper bound; refined below
  }
  if (total == 0) {
    line->detail << " no pooled decisions;";
    return false;
  }
  // Non-overlapping count: with 50% overlap there are 2k-1 windows per k
  // non-overlapping ones; k = (n + 1) / 2 per trial-row aggregate.
  nonoverlap = (nonoverlap + 1) / 2;
  const double acc = static_cast<double>(correct) / total;
  const double band = eval::chance_level(static_cast<int>(nonoverlap));
  line->detail << " pooled acc " << acc << " vs band [" << 1.0 - band << ", "
               << band << "];";
  return acc <= band && acc >= 1.0 - band;
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient suite.

bool criterion_gradients(Line* line) {
  RandomStream rng(101);
  double worst_layer = 0.0;

  // conv1d: weighted-sum loss over the output.
  {
    nn::Conv1dParams p;
    p.weight = random_tensor({3, 2, 5}, rng);
    p.bias = random_tensor({3}, rng);
    nn::Conv1dParams g;
    g.weight = nn::Tensor({3, 2, 5});
    g.bias = nn::Tensor({3});
    nn::Tensor x = random_tensor({2, 20}, rng);
    nn::Tensor gx({2, 20});
    const nn::Tensor w = random_tensor({3, 20}, rng);
    std::vector<nn::ParamRef> params{{"conv.w", &p.weight, &g.weight},
                                     {"conv.b", &p.bias, &g.bias},
                                     {"conv.x", &x, &gx}};
    auto fwd_bwd = [&] {
      g.weight.fill(0.0);
      g.bias.fill(0.0);
      gx.fill(0.0);
      const nn::Tensor y = nn::conv1d(x, p);
      nn::conv1d_backward_acc(w, x, p, &gx, g.weight, g.bias);
      double loss = 0.0;
      for (std::size_t i = 0; i < y.data.size(); ++i)
        loss += w.data[i] * y.data[i];
      return loss;
    };
    worst_layer = std::max(worst_layer, run_layer_check(fwd_bwd, params));
  }

  // maxpool + dense + batchnorm + elu + dropout + softmax-CE, each through a
  // tiny composite with analytic backward.
  {
    nn::DenseParams p;
    p.weight = random_tensor({2, 6}, rng);
    p.bias = random_tensor({2}, rng);
    nn::DenseParams g;
    g.weight = nn::Tensor({2, 6});
    g.bias = nn::Tensor({2});
    nn::BatchNorm1dParams bn = nn::make_batchnorm(2);
    bn.gamma = random_tensor({2}, rng);
    bn.beta = random_tensor({2}, rng);
    nn::Tensor g_gamma({2}), g_beta({2});
    nn::Tensor x = random_tensor({3, 2, 9}, rng);  // batch 3, 2 ch, 9 samples
    const std::vector<int> labels{0, 1, 0};
    std::vector<nn::ParamRef> params{{"dense.w", &p.weight, &g.weight},
                                     {"dense.b", &p.bias, &g.bias},
                                     {"bn.gamma", &bn.gamma, &g_gamma},
                                     {"bn.beta", &bn.beta, &g_beta}};
    auto fwd_bwd = [&] {
      g.weight.fill(0.0);
      g.bias.fill(0.0);
      g_gamma.fill(0.0);
      g_beta.fill(0.0);
      nn::BatchNormCache bn_cache;
      nn::BatchNorm1dParams bn_copy = bn;  // running stats stay untouched
      const nn::Tensor normed = nn::batchnorm1d_train(x, bn_copy, &bn_cache);
      // per sample: elu -> maxpool(3,3) -> dropout(fixed seed) -> dense
      nn::Tensor feats({3, 6});
      std::vector<nn::Tensor> elu_in(3), pool_in(3);
      std::vector<nn::MaxPoolCache> pools(3);
      std::vector<nn::DropoutCache> drops(3);
      for (std::int64_t b = 0; b < 3; ++b) {
        nn::Tensor sample({2, 9});
        std::copy(normed.data.begin() + b * 18,
                  normed.data.begin() + (b + 1) * 18, sample.data.begin());
        elu_in[static_cast<std::size_t>(b)] = sample;
        const nn::Tensor act = nn::elu(sample);
        const nn::Tensor pooled =
            nn::maxpool1d(act, 3, 3, &pools[static_cast<std::size_t>(b)]);
        const nn::Tensor dropped =
            nn::dropout(pooled, 0.25, nn::Mode::kTrain,
                        1000 + static_cast<std::uint64_t>(b),
                        &drops[static_cast<std::size_t>(b)]);
        std::copy(dropped.data.begin(), dropped.data.end(),
                  feats.ptr() + b * 6);
      }
      const nn::Tensor logits = nn::dense(feats, p);
      const auto ce = nn::softmax_cross_entropy(logits, labels);

      const auto dg = nn::dense_backward(ce.grad_logits, feats, p);
      g.weight = dg.weight;
      g.bias = dg.bias;
      nn::Tensor g_normed({3, 2, 9});
      for (std::int64_t b = 0; b < 3; ++b) {
        nn::Tensor g_feat({2, 3});
        std::copy(dg.input.ptr() + b * 6, dg.input.ptr() + (b + 1) * 6,
                  g_feat.data.begin());
        const nn::Tensor g_pool = nn::dropout_backward(
            g_feat, drops[static_cast<std::size_t>(b)]);
        const nn::Tensor g_act = nn::maxpool1d_backward(
            g_pool, pools[static_cast<std::size_t>(b)]);
        const nn::Tensor g_sample =
            nn::elu_backward(g_act, elu_in[static_cast<std::size_t>(b)]);
        std::copy(g_sample.data.begin(), g_sample.data.end(),
                  g_normed.data.begin() + b * 18);
      }
      const auto bg = nn::batchnorm1d_backward(g_normed, bn_cache, bn_copy);
      g_gamma = bg.gamma;
      g_beta = bg.beta;
      return ce.loss;
    };
    worst_layer = std::max(worst_layer, run_layer_check(fwd_bwd, params));
  }
  line->detail << " layers max rel err " << worst_layer << " (tol 1e-4);";
  if (worst_layer >= 1e-4) line->ok = false;

  // Full Inception block, EEG spec, 8 channels x 64 samples.
  {
    net::AadnetConfig cfg;
    cfg.n_eeg_channels = 8;
    cfg.hidden = 0;
    cfg.dropout_rate = 0.0;
    net::AadnetModel model(cfg);
    model.init_params(41);
    std::vector<net::TrainSample> batch(1);
    batch[0].eeg = testutil::randn_matrix(8, 64, rng);
    batch[0].env_a = testutil::randn_vector(64, rng);
    batch[0].env_b = testutil::randn_vector(64, rng);
    batch[0].label = 0;
    std::vector<const net::TrainSample*> ptrs{&batch[0]};
    std::vector<nn::ParamRef> incep;
    for (auto& ref : model.params())
      if (ref.name.rfind("eeg.incep", 0) == 0) incep.push_back(ref);
    auto fwd_bwd = [&] { return model.train_batch(ptrs, 13, 1).loss; };
    const double err = run_layer_check(fwd_bwd, incep);
    line->detail << " inception " << err << " (tol 1e-4);";
    if (err >= 1e-4) line->ok = false;
  }

  // Miniature end-to-end network.
  {
    net::AadnetConfig cfg;
    cfg.n_eeg_channels = 4;
    cfg.hidden = 4;
    cfg.dropout_rate = 0.2;
    net::AadnetModel model(cfg, mini_eeg_spec(), mini_audio_spec());
    model.init_params(42);
    std::vector<net::TrainSample> batch(2);
    for (std::size_t i = 0; i < 2; ++i) {
      batch[i].eeg = testutil::randn_matrix(4, 96, rng);
      batch[i].env_a = testutil::randn_vector(96, rng);
      batch[i].env_b = testutil::randn_vector(96, rng);
      batch[i].label = static_cast<int>(i);
    }
    std::vector<const net::TrainSample*> ptrs{&batch[0], &batch[1]};
    auto fwd_bwd = [&] { return model.train_batch(ptrs, 29, 1).loss; };
    const double err = run_layer_check(fwd_bwd, model.params());
    line->detail << " end-to-end " << err << " (tol 1e-3);";
    if (err >= 1e-3) line->ok = false;
  }
  return line->ok;
}

// ---------------------------------------------------------------------------
// Criterion 2: linear-algebra oracles.

bool criterion_linear_oracles(Line* line) {
  RandomStream rng(202);
  double worst_ridge = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index rows = 80 + static_cast<Eigen::Index>(rng.uniform_below(120));
    const Eigen::Index cols = 4 + static_cast<Eigen::Index>(rng.uniform_below(12));
    const Eigen::MatrixXd x = testutil::randn_matrix(rows, cols, rng);
    const Eigen::VectorXd s = testutil::randn_vector(rows, rng);
    const double lambda = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    const linear::RidgeDecoder d = linear::ridge_fit(x, s, lambda);
    Eigen::MatrixXd a = x.transpose() * x;
    a.diagonal().array() += lambda;
    const Eigen::VectorXd want = a.inverse() * (x.transpose() * s);
    worst_ridge = std::max(worst_ridge, (d.g - want).norm() / want.norm());
  }
  line->detail << " ridge worst rel err " << worst_ridge << " (tol 1e-8);";
  if (worst_ridge >= 1e-8) line->ok = false;

  double worst_cca = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index rows = 300 + static_cast<Eigen::Index>(rng.uniform_below(300));
    const Eigen::Index dx = 3 + static_cast<Eigen::Index>(rng.uniform_below(5));
    const Eigen::Index ds = 2 + static_cast<Eigen::Index>(rng.uniform_below(4));
    const Eigen::Index shared = std::min(dx, ds);
    const Eigen::MatrixXd latent = testutil::randn_matrix(rows, shared, rng);
    Eigen::MatrixXd x = testutil::randn_matrix(rows, dx, rng);
    x.leftCols(shared) += 1.5 * latent;
    Eigen::MatrixXd s = testutil::randn_matrix(rows, ds, rng);
    s.leftCols(shared) += latent;
    const linear::CcaModel m = linear::cca_fit(x, s, 1e-6);

    // Whitening + SVD oracle with the same shrinkage.
    const double denom = static_cast<double>(rows - 1);
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd sc = s.rowwise() - s.colwise().mean();
    Eigen::MatrixXd rxx = xc.transpose() * xc / denom;
    Eigen::MatrixXd rss = sc.transpose() * sc / denom;
    rxx.diagonal().array() += 1e-6 * rxx.trace() / static_cast<double>(dx);
    rss.diagonal().array() += 1e-6 * rss.trace() / static_cast<double>(ds);
    auto inv_sqrt = [](const Eigen::MatrixXd& mat) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
      return Eigen::MatrixXd(es.eigenvectors() *
                             es.eigenvalues().cwiseSqrt().cwiseInverse()
                                 .asDiagonal() *
                             es.eigenvectors().transpose());
    };
    const Eigen::MatrixXd k =
        inv_sqrt(rxx) * (xc.transpose() * sc / denom) * inv_sqrt(rss);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k);
    for (Eigen::Index j = 0; j < m.correlations.size(); ++j)
      worst_cca = std::max(
          worst_cca, std::fabs(m.correlations[j] - svd.singularValues()[j]));
  }
  line->detail << " cca worst abs err " << worst_cca << " (tol 1e-6)";
  if (worst_cca >= 1e-6) line->ok = false;
  return line->ok;
}

// ---------------------------------------------------------------------------
// Criterion 3: synthetic pipeline at high SNR plus the null dataset.

bool criterion_pipeline(Line* line) {
  data::SynthConfig hi;
  hi.n_subjects = 8;
  hi.trials_per_subject = 40;
  hi.trial_s = 30.0;
  hi.n_channels = 8;
  hi.leakage_gain = 0.2;
  hi.noise_std = 0.5;
  hi.seed = 303;
  const data::Dataset ds_hi = data::synth_generate(hi);

  data::SynthConfig null_cfg = hi;
  null_cfg.n_informative = 0;
  null_cfg.noise_std = 1.0;
  null_cfg.seed = 304;
  const data::Dataset ds_null = data::synth_generate(null_cfg);

  eval::EvalOptions base;
  base.mode = eval::Mode::kSubjectSpecific;
  base.window_lengths_s = {20.0};
  base.overlap = 0.75;
  base.seed = 31;
  base.workers = 0;

  // LSR SS, all subjects and folds.
  {
    eval::EvalOptions opt = base;
    opt.method = eval::Method::kLsr;
    const double acc = pooled_accuracy(eval::run_evaluation(ds_hi, opt), 20.0);
    line->detail << " lsr ss acc " << acc << " (>= 0.90);";
    if (!(acc >= 0.90)) line->ok = false;
  }

  // CCA + LDA SS.
  {
    eval::EvalOptions opt = base;
    opt.method = eval::Method::kCca;
    const double acc = pooled_accuracy(eval::run_evaluation(ds_hi, opt), 20.0);
    line->detail << " cca ss acc " << acc << " (>= 0.90);";
    if (!(acc >= 0.90)) line->ok = false;
  }

  // AADNet SS after SI pretraining + fine-tuning, evaluated on a subject /
  // fold subset to stay inside the runtime budget.
  {
    eval::EvalOptions opt = base;
    opt.method = eval::Method::kAadnet;
    opt.subjects = {"sub00"};
    opt.fold_filter = {0, 1};
    opt.train.lr = 1e-3;  // desk-scale problem; the protocol is unchanged
    opt.train.batch_size = 32;
    opt.train.max_epochs = 12;
    opt.train.dropout = 0.2;
    opt.train.hidden = 16;
    const double acc = pooled_accuracy(eval::run_evaluation(ds_hi, opt), 20.0);
    line->detail << " aadnet ss acc " << acc << " (>= 0.85);";
    if (!(acc >= 0.85)) line->ok = false;
  }

  // Null dataset: every method inside the pooled binomial chance band.
  {
    eval::EvalOptions opt = base;
    opt.method = eval::Method::kLsr;
    opt.overlap = 0.5;
    if (!within_chance_band(eval::run_evaluation(ds_null, opt), 20.0, 30.0,
                            line))
      line->ok = false;
    opt.method = eval::Method::kCca;
    opt.subjects = {"sub00", "sub01", "sub02"};
    if (!within_chance_band(eval::run_evaluation(ds_null, opt), 20.0, 30.0,
                            line))
      line->ok = false;
    opt.method = eval::Method::kAadnet;
    opt.subjects = {"sub00"};
    opt.fold_filter = {0, 1};
    opt.train.lr = 1e-3;
    opt.train.batch_size = 32;
    opt.train.max_epochs = 4;
    opt.train.dropout = 0.2;
    if (!within_chance_band(eval::run_evaluation(ds_null, opt), 20.0, 30.0,
                            line))
      line->ok = false;
  }
  return line->ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: SI leakage invariant over 1000 randomized corpora.

bool criterion_si_leakage(Line* line) {
  RandomStream rng(404);
  int corpora = 0, plans_checked = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n_subjects = 2 + static_cast<int>(rng.uniform_below(5));
    const int folds = 2 + static_cast<int>(rng.uniform_below(7));
    const int n_stimuli = 2 + static_cast<int>(rng.uniform_below(40));
    std::vector<std::vector<eval::TrialRef>> subjects;
    for (int s = 0; s < n_subjects; ++s) {
      const int n_trials =
          folds + static_cast<int>(rng.uniform_below(30));
      std::vector<eval::TrialRef> trials;
      for (int t = 0; t < n_trials; ++t)
        trials.push_back({"s" + std::to_string(s), "t" + std::to_string(t),
                          "stim" + std::to_string(rng.uniform_below(
                              static_cast<std::uint64_t>(n_stimuli)))});
      subjects.push_back(std::move(trials));
    }
    const std::size_t test_subject = rng.uniform_below(n_subjects);
    try {
      const auto plans = eval::split_si_cross_trial(
          subjects, test_subject, folds, derive_seed(404, rep));
      ++corpora;
      for (const auto& plan : plans) {
        ++plans_checked;
        if (!eval::stimulus_leakage_free(plan)) {
          line->detail << " LEAK at corpus " << rep << " fold " << plan.fold;
          return false;
        }
      }
    } catch (const ValueError&) {
      // Empty pools from extreme stimulus sharing are legal rejections.
    }
  }
  line->detail << " " << corpora << " corpora / " << plans_checked
               << " plans leak-free";
  return true;
}

// ---------------------------------------------------------------------------
// Criterion 5: MESD closed form vs Monte Carlo; censoring; monotonicity.

double mc_hitting_time(double p, int k_bar, int walks, RandomStream& rng) {
  double total = 0.0;
  for (int w = 0; w < walks; ++w) {
    int state = 1;
    long long steps = 0;
    while (state < k_bar) {
      ++steps;
      if (rng.uniform() < p)
        ++state;
      else if (state > 1)
        --state;
    }
    total += static_cast<double>(steps);
  }
  return total / walks;
}

bool criterion_mesd(Line* line) {
  RandomStream rng(505);
  const eval::MesdConfig cfg;
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<eval::AccuracyPoint> curve;
    double p = 0.60 + 0.05 * rng.uniform();
    for (double tau : {1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) {
      curve.push_back({tau, std::min(0.9, p)});
      p += 0.06 * rng.uniform();
    }
    const auto r = eval::mesd(curve, cfg);
    if (std::isnan(r.mesd_s)) {
      line->detail << " unexpected censoring at rep " << rep;
      return false;
    }
    // Reconstruct the chain at the optimum and simulate it.
    double p_opt = curve.back().p;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
      if (r.tau_opt_s >= curve[i].tau_s && r.tau_opt_s <= curve[i + 1].tau_s) {
        const double f = (r.tau_opt_s - curve[i].tau_s) /
                         (curve[i + 1].tau_s - curve[i].tau_s);
        p_opt = curve[i].p + f * (curve[i + 1].p - curve[i].p);
        break;
      }
    }
    const auto k = eval::minimal_state_count(p_opt, cfg);
    if (!k.has_value()) return false;
    const int k_bar = eval::comfort_state(*k, cfg.comfort_gain);
    const double closed = eval::expected_hitting_time(p_opt, k_bar);
    const double mc = mc_hitting_time(p_opt, k_bar, 100000, rng);
    worst = std::max(worst, std::fabs(closed - mc) / closed);
    // Consistency of the reported optimum with the chain formula.
    if (std::fabs(r.tau_opt_s * closed - r.mesd_s) > 1e-9 * r.mesd_s + 1e-9) {
      line->detail << " optimum/closed-form mismatch at rep " << rep;
      return false;
    }
  }
  line->detail << " closed-form vs MC worst rel err " << worst
               << " (tol 0.02);";
  if (worst >= 0.02) line->ok = false;

  // p <= 0.5 everywhere: censored.
  const auto censored =
      eval::mesd({{1.0, 0.45}, {10.0, 0.5}, {40.0, 0.5}}, cfg);
  if (!censored.censored || !std::isnan(censored.mesd_s)) {
    line->detail << " censoring failed;";
    line->ok = false;
  }

  // Monotonicity under pointwise improvement on 100 perturbed curves.
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<eval::AccuracyPoint> base;
    double p = 0.52 + 0.2 * rng.uniform();
    for (double tau : {1.0, 5.0, 20.0, 40.0}) {
      base.push_back({tau, std::min(0.97, p)});
      p += 0.1 * rng.uniform();
    }
    auto better = base;
    for (auto& pt : better)
      pt.p = std::min(1.0, pt.p + 0.002 + 0.06 * rng.uniform());
    const auto rb = eval::mesd(base, cfg);
    const auto rg = eval::mesd(better, cfg);
    if (std::isnan(rb.mesd_s)) continue;  // base censored: nothing to compare
    if (std::isnan(rg.mesd_s) || rg.mesd_s > rb.mesd_s + 1e-9) {
      line->detail << " monotonicity violated at rep " << rep;
      return false;
    }
  }
  line->detail << " monotone on 100 perturbed curves";
  return line->ok;
}

// ---------------------------------------------------------------------------
// Criterion 6: statistics calibration.

bool criterion_statistics(Line* line) {
  const double c100 = eval::chance_level(100);
  line->detail << " chance_level(100) = " << c100 << " (expect 0.58);";
  if (std::fabs(c100 - 0.58) > 1e-12) line->ok = false;

  RandomStream rng(606);
  const int reps = 1000, n_perm = 1999, n_subjects = 12;
  std::vector<double> ps;
  ps.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    std::vector<double> a(n_subjects), b(n_subjects);
    for (int i = 0; i < n_subjects; ++i) {
      a[static_cast<std::size_t>(i)] = rng.normal();
      b[static_cast<std::size_t>(i)] = rng.normal();
    }
    ps.push_back(eval::paired_permutation_test(a, b, n_perm,
                                               derive_seed(606, r)));
  }
  std::sort(ps.begin(), ps.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ks = std::max(ks, std::fabs((i + 1.0) / reps - ps[i]));
    ks = std::max(ks, std::fabs(ps[i] - static_cast<double>(i) / reps));
  }
  line->detail << " null p-value KS " << ks << " (tol 0.05)";
  if (ks >= 0.05) line->ok = false;
  return line->ok;
}

// ---------------------------------------------------------------------------
// Criterion 7: architecture conformance.

bool criterion_architecture(Line* line) {
  const auto eeg = net::eeg_inception_spec(32);
  const auto audio = net::audio_inception_spec();
  if (eeg.out_channels() != 72 || audio.out_channels() != 9) {
    line->detail << " channel counts wrong: " << eeg.out_channels() << "/"
                 << audio.out_channels();
    return false;
  }

  net::AadnetConfig cfg;
  cfg.n_eeg_channels = 32;
  cfg.hidden = 16;
  net::AadnetModel model(cfg);
  if (model.feature_count() != 1296) {
    line->detail << " head input " << model.feature_count() << " != 1296";
    return false;
  }

  // Independent closed-form parameter count (Table arithmetic).
  const std::int64_t n = 32, h = 16;
  std::int64_t want = 2 * n;                                 // input BN
  want += 32 * n + 32;                                       // transform
  want += (16 * n + 16) + (8 * 16 * 19 + 8);                 // feature 1
  want += (8 * n + 8) + (8 * 8 * 25 + 8);                    // feature 2
  want += (4 * n + 4) + (8 * 4 * 33 + 8);                    // feature 3
  want += (2 * n + 2) + (8 * 2 * 39 + 8);                    // feature 4
  want += 8 * n + 8;                                         // pooling 1x1
  want += 2 * 72 + 2 * 1 + 2 * 9;                            // BNs
  want += (1 + 1) + ((1 + 1) + (4 * 65 + 4)) + ((1 + 1) + (4 * 81 + 4));
  want += 1296 * h + h + 2 * h + h * 2 + 2;                  // head
  const std::int64_t got = model.parameter_count();
  line->detail << " params " << got << " (closed form " << want << ");";
  if (got != want) return false;

  model.init_params(7);
  RandomStream rng(707);
  const Eigen::MatrixXd e = testutil::randn_matrix(32, 640, rng);
  const Eigen::VectorXd a = testutil::randn_vector(640, rng);
  const Eigen::VectorXd b = testutil::randn_vector(640, rng);
  const Eigen::Vector2d p1 = model.forward_eval(e, a, b);
  const Eigen::Vector2d p2 = model.forward_eval(e, a, b);
  line->detail << " eval forward bitwise deterministic: "
               << (p1 == p2 ? "yes" : "no");
  return p1 == p2;
}

// ---------------------------------------------------------------------------
// Criterion 8: CLI reproducibility.

bool criterion_cli(Line* line) {
  const fs::path root = g_scratch / "cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string synth_args =
      " --seed 11 --subjects 3 --trials 10 --trial-s 25 --channels 5"
      " --noise 0.4";

  if (run_cli("synth --out " + (root / "d1").string() + synth_args) != 0 ||
      run_cli("synth --out " + (root / "d2").string() + synth_args) != 0)
    return false;
  if (!trees_identical(root / "d1", root / "d2")) {
    line->detail << " synth not reproducible;";
    return false;
  }
  line->detail << " synth reproducible;";

  const std::string eval_lsr = "eval --dataset " + (root / "d1").string() +
                               " --method lsr --mode ss --windows 10,20"
                               " --seed 2";
  if (run_cli(eval_lsr + " --out " + (root / "l1.csv").string()) != 0 ||
      run_cli(eval_lsr + " --out " + (root / "l2.csv").string()) != 0)
    return false;
  if (slurp(root / "l1.csv") != slurp(root / "l2.csv")) {
    line->detail << " lsr eval not reproducible;";
    return false;
  }

  const std::string eval_net = "eval --dataset " + (root / "d1").string() +
                               " --method aadnet --mode si --windows 10"
                               " --seed 2 --subjects sub00 --folds 0"
                               " --max-epochs 2 --batch-size 16";
  if (run_cli(eval_net + " --workers 1 --out " + (root / "n1.csv").string()) !=
          0 ||
      run_cli(eval_net + " --workers 2 --out " + (root / "n2.csv").string()) !=
          0)
    return false;
  if (slurp(root / "n1.csv") != slurp(root / "n2.csv")) {
    line->detail << " aadnet eval depends on --workers;";
    return false;
  }
  line->detail << " eval reproducible and worker-independent;";

  const std::string train_args = "train --dataset " + (root / "d1").string() +
                                 " --method lsr --mode ss --seed 3"
                                 " --subjects sub01";
  if (run_cli(train_args + " --out " + (root / "c1").string()) != 0 ||
      run_cli(train_args + " --out " + (root / "c2").string()) != 0)
    return false;
  if (!trees_identical(root / "c1", root / "c2")) {
    line->detail << " train checkpoints not reproducible;";
    return false;
  }

  // mesd and report over the lsr output.
  const std::string mesd_args = "mesd --report " + (root / "l1.csv").string();
  if (run_cli(mesd_args + " --out " + (root / "m1.csv").string()) != 0 ||
      run_cli(mesd_args + " --out " + (root / "m2.csv").string()) != 0)
    return false;
  if (slurp(root / "m1.csv") != slurp(root / "m2.csv")) return false;
  const std::string report_args =
      "report --in " + (root / "l1.csv").string() + " --seed 5";
  if (run_cli(report_args + " --out " + (root / "s1.csv").string()) != 0 ||
      run_cli(report_args + " --out " + (root / "s2.csv").string()) != 0)
    return false;
  if (slurp(root / "s1.csv") != slurp(root / "s2.csv")) return false;
  line->detail << " train/mesd/report reproducible";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") g_cli = argv[i + 1];
    if (flag == "--scratch") g_scratch = argv[i + 1];
    if (flag == "--only") only = std::atoi(argv[i + 1]);
  }
  if (g_scratch.empty()) g_scratch = fs::temp_directory_path() / "aad_accept";
  fs::create_directories(g_scratch);

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(Line*)> fn;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient suite", criterion_gradients},
      {2, "linear-algebra oracles", criterion_linear_oracles},
      {3, "synthetic pipeline", criterion_pipeline},
      {4, "SI stimulus-leakage invariant", criterion_si_leakage},
      {5, "MESD", criterion_mesd},
      {6, "statistics calibration", criterion_statistics},
      {7, "architecture conformance", criterion_architecture},
      {8, "CLI reproducibility", criterion_cli},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && only != c.id) continue;
    if (c.id == 8 && g_cli.empty()) {
      std::cout << "[FAIL] " << c.id << ". " << c.name
                << ": --cli path not given\n";
      ++failures;
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Line line;
    bool ok = false;
    try {
      ok = c.fn(&line) && line.ok;
    } catch (const std::exception& e) {
      line.detail << " exception: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ":"
              << line.detail.str() << "  [" << secs << " s]\n";
    std::cout.flush();
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
