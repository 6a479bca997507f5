#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aad/data/synth.hpp"
#include "aad/net/model.hpp"
#include "aad/net/train.hpp"
#include "aad/nn/grad_check.hpp"
#include "support/testutil.hpp"

using namespace aad;
using namespace aad::net;

namespace {

nn::Tensor random_tensor(std::vector<std::int64_t> shape, RandomStream& rng) {
  nn::Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.normal();
  return t;
}

/// Closed-form trainable parameter count from the block tables: conv params
/// are C_out*C_in*k + C_out, dense F_out*F_in + F_out, BN affine 2*C.
std::int64_t expected_parameter_count(int n, int h) {
  std::int64_t count = 2 * n;  // EEG input BN
  count += 32 * n + 32;        // transform
  auto feature = [&](int reduce, int k, int out) {
    return (reduce * n + reduce) + (out * reduce * k + out);
  };
  count += feature(16, 19, 8) + feature(8, 25, 8) + feature(4, 33, 8) +
           feature(2, 39, 8);
  count += 8 * n + 8;  // pooling branch 1x1
  count += 2 * 72;     // EEG post BN
  count += 2 * 1;      // audio input BN
  count += 1 * 1 + 1;  // audio transform
  count += (1 * 1 + 1) + (4 * 1 * 65 + 4);  // audio feature 1
  count += (1 * 1 + 1) + (4 * 1 * 81 + 4);  // audio feature 2
  count += 2 * 9;                           // audio post BN
  const std::int64_t features = 2 * 72 * 9;
  if (h > 0) {
    count += features * h + h;  // FC1
    count += 2 * h;             // head BN
    count += h * 2 + 2;         // FC2
  } else {
    count += features * 2 + 2;
  }
  return count;
}

InceptionSpec mini_eeg_spec() {
  InceptionSpec s;
  s.in_channels = 4;
  s.branches = {
      {BranchKind::kTransform, 0, 1, 4}, {BranchKind::kFeature, 2, 19, 2},
      {BranchKind::kFeature, 2, 25, 2},  {BranchKind::kFeature, 1, 33, 2},
      {BranchKind::kFeature, 1, 39, 2},  {BranchKind::kPooling, 0, 1, 2},
  };
  return s;
}

InceptionSpec mini_audio_spec() {
  InceptionSpec s;
  s.in_channels = 1;
  s.branches = {
      {BranchKind::kTransform, 0, 1, 1},
      {BranchKind::kFeature, 1, 65, 2},
      {BranchKind::kFeature, 1, 81, 2},
  };
  return s;
}

std::vector<TrainSample> samples_from_dataset(const data::SynthConfig& cfg,
                                              double window_s) {
  const auto ds = data::synth_generate(cfg);
  std::vector<Trial> storage;
  for (const auto& s : ds.subjects)
    for (const auto& rec : s.trials) storage.push_back(data::to_trial(s, rec));
  std::vector<const Trial*> ptrs;
  for (const auto& t : storage) ptrs.push_back(&t);
  return make_training_windows(ptrs, window_s);
}

}  // namespace

TEST_CASE("inception output channels follow the block tables") {
  RandomStream rng(51);
  AadnetConfig cfg;
  cfg.n_eeg_channels = 32;

  SUBCASE("EEG block: 32 -> 72 channels, audio block: 1 -> 9") {
    CHECK(eeg_inception_spec(32).out_channels() == 72);
    CHECK(audio_inception_spec().out_channels() == 9);
    AadnetModel model(cfg);
    model.init_params(1);
    // Exercised through the public eval path.
    const Eigen::MatrixXd eeg = testutil::randn_matrix(32, 320, rng);
    const Eigen::VectorXd env = testutil::randn_vector(320, rng);
    const Eigen::Vector2d p = model.forward_eval(eeg, env, env);
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(model.feature_count() == 2 * 72 * 9);
  }

  SUBCASE("zero input with zero parameters stays zero") {
    // Default-constructed (un-initialized) blocks hold zero weights/biases.
    AadnetModel model(cfg);
    auto refs = model.params();
    for (auto& r : refs)
      if (r.name.find("gamma") == std::string::npos) r.value->fill(0.0);
    // ReLU(conv(0)) with zero bias is exactly zero; the correlation layer
    // then reports all-degenerate zeros and softmax gives 0.5/0.5.
    const Eigen::MatrixXd eeg = Eigen::MatrixXd::Zero(32, 320);
    const Eigen::VectorXd env = Eigen::VectorXd::Zero(320);
    const Eigen::Vector2d p = model.forward_eval(eeg, env, env);
    CHECK(p[0] == doctest::Approx(0.5));
  }
}

TEST_CASE("correlation layer") {
  RandomStream rng(52);
  const nn::Tensor eeg = random_tensor({6, 40}, rng);
  const nn::Tensor aud_a = random_tensor({3, 40}, rng);
  const nn::Tensor aud_b = random_tensor({3, 40}, rng);

  SUBCASE("matches a per-pair brute-force Pearson loop") {
    const Eigen::VectorXd f = correlation_layer(eeg, aud_a, aud_b);
    REQUIRE(f.size() == 2 * 6 * 3);
    for (int stream = 0; stream < 2; ++stream) {
      const nn::Tensor& aud = stream == 0 ? aud_a : aud_b;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) {
          Eigen::VectorXd u(40), v(40);
          for (int t = 0; t < 40; ++t) {
            u[t] = eeg.at2(i, t);
            v[t] = aud.at2(j, t);
          }
          const double want = testutil::pearson_reference(u, v);
          CHECK(std::fabs(f[stream * 18 + i * 3 + j] - want) < 1e-10);
        }
    }
  }

  SUBCASE("audio channel copied from an EEG channel correlates at 1") {
    nn::Tensor aud = aud_a;
    for (int t = 0; t < 40; ++t) aud.at2(1, t) = eeg.at2(4, t);
    const Eigen::VectorXd f = correlation_layer(eeg, aud, aud_b);
    CHECK(f[4 * 3 + 1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("all entries live in [-1, 1]") {
    const Eigen::VectorXd f = correlation_layer(eeg, aud_a, aud_b);
    CHECK(f.maxCoeff() <= 1.0);
    CHECK(f.minCoeff() >= -1.0);
  }

  SUBCASE("invariant to positive rescaling of an audio channel") {
    nn::Tensor scaled = aud_a;
    for (int t = 0; t < 40; ++t) scaled.at2(0, t) *= 11.0;
    const Eigen::VectorXd f1 = correlation_layer(eeg, aud_a, aud_b);
    const Eigen::VectorXd f2 = correlation_layer(eeg, scaled, aud_b);
    CHECK((f1 - f2).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("gradient matches finite differences") {
    CorrelationCache cache;
    correlation_layer(eeg, aud_a, aud_b, &cache);
    RandomStream grng(53);
    Eigen::VectorXd grad_f(36);
    for (int i = 0; i < 36; ++i) grad_f[i] = grng.normal();
    const CorrelationGrads g = correlation_backward(grad_f, cache);

    auto loss = [&](const nn::Tensor& e, const nn::Tensor& a,
                    const nn::Tensor& b) {
      return grad_f.dot(correlation_layer(e, a, b));
    };
    const double h = 1e-6;
    for (const auto& [tensor, grad] :
         {std::pair{&eeg, &g.eeg}, {&aud_a, &g.audio_a},
          {&aud_b, &g.audio_b}}) {
      nn::Tensor probe = *tensor;
      for (std::size_t i = 0; i < probe.data.size(); i += 7) {
        const double saved = probe.data[i];
        probe.data[i] = saved + h;
        const double up = tensor == &eeg ? loss(probe, aud_a, aud_b)
                          : tensor == &aud_a ? loss(eeg, probe, aud_b)
                                             : loss(eeg, aud_a, probe);
        probe.data[i] = saved - h;
        const double dn = tensor == &eeg ? loss(probe, aud_a, aud_b)
                          : tensor == &aud_a ? loss(eeg, probe, aud_b)
                                             : loss(eeg, aud_a, probe);
        probe.data[i] = saved;
        CHECK(std::fabs((up - dn) / (2 * h) - grad->data[i]) < 1e-5);
      }
    }
  }

  SUBCASE("length mismatch raises") {
    CHECK_THROWS_AS(correlation_layer(eeg, random_tensor({3, 39}, rng), aud_b),
                    ShapeError);
  }
}

TEST_CASE("parameter count matches the closed form") {
  for (int h : {16, 32, 0}) {
    AadnetConfig cfg;
    cfg.n_eeg_channels = 32;
    cfg.hidden = h;
    AadnetModel model(cfg);
    CHECK(model.parameter_count() == expected_parameter_count(32, h));
  }
  AadnetConfig cfg;
  cfg.n_eeg_channels = 16;
  AadnetModel model(cfg);
  CHECK(model.parameter_count() == expected_parameter_count(16, 16));
}

TEST_CASE("eval forward is bitwise deterministic and rejects short input") {
  RandomStream rng(54);
  AadnetConfig cfg;
  cfg.n_eeg_channels = 8;
  AadnetModel model(cfg);
  model.init_params(9);
  const Eigen::MatrixXd eeg = testutil::randn_matrix(8, 128, rng);
  const Eigen::VectorXd a = testutil::randn_vector(128, rng);
  const Eigen::VectorXd b = testutil::randn_vector(128, rng);
  const Eigen::Vector2d p1 = model.forward_eval(eeg, a, b);
  const Eigen::Vector2d p2 = model.forward_eval(eeg, a, b);
  CHECK(p1[0] == p2[0]);
  CHECK(p1[1] == p2[1]);
  CHECK(p1[0] + p1[1] == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(model.forward_eval(testutil::randn_matrix(8, 50, rng),
                                     testutil::randn_vector(50, rng),
                                     testutil::randn_vector(50, rng)),
                  ValueError);
}

TEST_CASE("audio branch weight sharing makes stream features swap exactly") {
  RandomStream rng(55);
  AadnetConfig cfg;
  cfg.n_eeg_channels = 4;
  AadnetModel model(cfg, mini_eeg_spec(), mini_audio_spec());
  model.init_params(3);

  // Count audio parameter groups: exactly one shared branch stack.
  std::size_t audio_groups = 0;
  for (const auto& ref : model.params())
    if (ref.name.rfind("audio.incep", 0) == 0) ++audio_groups;
  CHECK(audio_groups == 2 * 3 + 2 * 2);  // conv w/b per branch + reduces

  const Eigen::MatrixXd eeg = testutil::randn_matrix(4, 96, rng);
  const Eigen::VectorXd x = testutil::randn_vector(96, rng);
  const Eigen::VectorXd y = testutil::randn_vector(96, rng);
  const Eigen::Vector2d pxy = model.forward_eval(eeg, x, y);
  const Eigen::Vector2d pyx = model.forward_eval(eeg, y, x);
  // Not equal in general (head weights are position-dependent), but both
  // runs push the same stream content through the same audio parameters;
  // checked indirectly through training-free determinism plus the swap
  // consistency of the augmented loss in the training tests.
  CHECK(std::isfinite(pxy[0]));
  CHECK(std::isfinite(pyx[0]));
}

TEST_CASE("augment_swap balances labels exactly") {
  RandomStream rng(56);
  std::vector<TrainSample> batch(3);
  for (auto& s : batch) {
    s.eeg = testutil::randn_matrix(2, 70, rng);
    s.env_a = testutil::randn_vector(70, rng);
    s.env_b = testutil::randn_vector(70, rng);
    s.label = 0;
  }
  const auto doubled = augment_swap(batch);
  REQUIRE(doubled.size() == 6);
  int ones = 0;
  for (const auto& s : doubled) ones += s.label;
  CHECK(ones == 3);

  const auto quadrupled = augment_swap(doubled);
  CHECK(quadrupled.size() == 12);

  SUBCASE("per-class stream means coincide after augmentation") {
    double mean_a_label0 = 0.0, mean_b_label1 = 0.0;
    int n0 = 0, n1 = 0;
    for (const auto& s : doubled) {
      if (s.label == 0) {
        mean_a_label0 += s.env_a.mean();
        ++n0;
      } else {
        mean_b_label1 += s.env_b.mean();
        ++n1;
      }
    }
    CHECK(mean_a_label0 / n0 == doctest::Approx(mean_b_label1 / n1));
  }

  SUBCASE("swapped copies flip the label and the streams") {
    CHECK(doubled[3].label == 1);
    CHECK((doubled[3].env_a - batch[0].env_b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((doubled[3].env_b - batch[0].env_a).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("miniature end-to-end gradient check") {
  RandomStream rng(57);
  AadnetConfig cfg;
  cfg.n_eeg_channels = 4;
  cfg.hidden = 4;
  cfg.dropout_rate = 0.2;
  AadnetModel model(cfg, mini_eeg_spec(), mini_audio_spec());
  model.init_params(11);

  std::vector<TrainSample> batch(2);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch[i].eeg = testutil::randn_matrix(4, 96, rng);
    batch[i].env_a = testutil::randn_vector(96, rng);
    batch[i].env_b = testutil::randn_vector(96, rng);
    batch[i].label = static_cast<int>(i % 2);
  }
  std::vector<const TrainSample*> ptrs{&batch[0], &batch[1]};

  auto params = model.params();
  auto forward_backward = [&] {
    return model.train_batch(ptrs, 77, 1).loss;
  };
  const auto report = nn::finite_diff_check(params, forward_backward,
                                            forward_backward);
  INFO("worst parameter: ", report.worst_param, " backprop ",
       report.worst_backprop, " numeric ", report.worst_numeric);
  CHECK(report.max_rel_error < 1e-3);
}

TEST_CASE("inception block gradient check (EEG spec, 8 channels)") {
  RandomStream rng(58);
  AadnetConfig cfg;
  cfg.n_eeg_channels = 8;
  cfg.hidden = 0;
  cfg.dropout_rate = 0.0;
  AadnetModel model(cfg);
  model.init_params(4);

  std::vector<TrainSample> batch(1);
  batch[0].eeg = testutil::randn_matrix(8, 64, rng);
  batch[0].env_a = testutil::randn_vector(64, rng);
  batch[0].env_b = testutil::randn_vector(64, rng);
  batch[0].label = 0;
  std::vector<const TrainSample*> ptrs{&batch[0]};

  // Restrict the check to the EEG inception parameters.
  std::vector<nn::ParamRef> incep_params;
  for (auto& ref : model.params())
    if (ref.name.rfind("eeg.incep", 0) == 0) incep_params.push_back(ref);
  REQUIRE(!incep_params.empty());

  auto forward_backward = [&] { return model.train_batch(ptrs, 3, 1).loss; };
  const auto report = nn::finite_diff_check(incep_params, forward_backward,
                                            forward_backward);
  INFO("worst parameter: ", report.worst_param);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("training on separable synthetic data") {
  data::SynthConfig dcfg;
  dcfg.n_subjects = 1;
  dcfg.trials_per_subject = 12;
  dcfg.trial_s = 20.0;
  dcfg.n_channels = 6;
  dcfg.noise_std = 0.3;
  dcfg.leakage_gain = 0.15;
  dcfg.seed = 33;
  auto samples = samples_from_dataset(dcfg, 10.0);
  REQUIRE(samples.size() == 24);
  std::vector<TrainSample> train_set(samples.begin(), samples.end() - 6);
  std::vector<TrainSample> val_set(samples.end() - 6, samples.end());

  AadnetConfig cfg;
  cfg.n_eeg_channels = 6;
  cfg.hidden = 16;
  cfg.dropout_rate = 0.2;

  TrainConfig tc;
  tc.lr = 5e-4;  // scaled up for this tiny smoke problem
  tc.batch_size = 8;
  tc.dropout = 0.2;
  tc.max_epochs = 30;
  tc.seed = 5;
  tc.workers = 2;

  AadnetModel model(cfg);
  model.init_params(21);
  const TrainResult result = train(model, train_set, val_set, tc);

  SUBCASE("validation accuracy clears 0.9") {
    const auto final_eval = model.evaluate(val_set, 2);
    CHECK(final_eval.accuracy > 0.9);
  }

  SUBCASE("restored checkpoint dominates every logged epoch") {
    for (const auto& e : result.log)
      CHECK(result.best_val_loss <= e.val_loss + 1e-12);
    const auto again = model.evaluate(val_set, 2);
    CHECK(again.loss == doctest::Approx(result.best_val_loss).epsilon(1e-9));
  }

  SUBCASE("identical seeds give identical logs") {
    AadnetModel m2(cfg);
    m2.init_params(21);
    const TrainResult r2 = train(m2, train_set, val_set, tc);
    REQUIRE(r2.log.size() == result.log.size());
    for (std::size_t i = 0; i < r2.log.size(); ++i) {
      CHECK(r2.log[i].train_loss == result.log[i].train_loss);
      CHECK(r2.log[i].val_loss == result.log[i].val_loss);
    }
  }

  SUBCASE("worker count does not change the math") {
    AadnetModel m2(cfg);
    m2.init_params(21);
    TrainConfig tc1 = tc;
    tc1.workers = 1;
    const TrainResult r2 = train(m2, train_set, val_set, tc1);
    REQUIRE(r2.log.size() == result.log.size());
    for (std::size_t i = 0; i < r2.log.size(); ++i)
      CHECK(r2.log[i].train_loss == result.log[i].train_loss);
  }
}

TEST_CASE("loss is non-increasing on one tiny batch at small lr") {
  RandomStream rng(59);
  AadnetConfig cfg;
  cfg.n_eeg_channels = 4;
  cfg.hidden = 4;
  cfg.dropout_rate = 0.0;  // keep the objective deterministic
  AadnetModel model(cfg, mini_eeg_spec(), mini_audio_spec());
  model.init_params(2);

  std::vector<TrainSample> batch(4);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch[i].eeg = testutil::randn_matrix(4, 96, rng);
    batch[i].env_a = testutil::randn_vector(96, rng);
    batch[i].env_b = testutil::randn_vector(96, rng);
    batch[i].label = static_cast<int>(i % 2);
  }
  std::vector<const TrainSample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);

  auto params = model.params();
  nn::AdamW opt({.lr = 1e-5}, params);
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 0; step < 10; ++step) {
    const auto stats = model.train_batch(ptrs, 1, 1);
    CHECK(stats.loss <= prev + 1e-12);
    prev = stats.loss;
    opt.step(params);
  }
}

TEST_CASE("finetune_ss") {
  data::SynthConfig dcfg;
  dcfg.n_subjects = 1;
  dcfg.trials_per_subject = 8;
  dcfg.trial_s = 20.0;
  dcfg.n_channels = 6;
  dcfg.seed = 44;
  auto samples = samples_from_dataset(dcfg, 10.0);
  std::vector<TrainSample> train_set(samples.begin(), samples.end() - 4);
  std::vector<TrainSample> val_set(samples.end() - 4, samples.end());

  AadnetConfig cfg;
  cfg.n_eeg_channels = 6;
  cfg.dropout_rate = 0.2;
  AadnetModel model(cfg);
  model.init_params(8);

  TrainConfig tc;
  tc.seed = 9;
  tc.batch_size = 8;
  tc.workers = 2;

  SUBCASE("zero epochs returns the initialization unchanged") {
    const auto before = model.snapshot_state();
    TrainConfig zero = tc;
    zero.max_epochs = 0;
    const TrainResult r = finetune_ss(model, train_set, val_set, zero);
    CHECK(r.best_epoch == -1);
    const auto after = model.snapshot_state();
    for (std::size_t i = 0; i < before.size(); ++i)
      CHECK(before[i].data == after[i].data);
  }

  SUBCASE("never ends worse than the initialization") {
    const double init_loss = model.evaluate(val_set, 2).loss;
    TrainConfig ft = tc;
    ft.lr = 5e-4;
    ft.max_epochs = 8;
    const TrainResult r = finetune_ss(model, train_set, val_set, ft);
    CHECK(r.best_val_loss <= init_loss + 1e-12);
    CHECK(model.evaluate(val_set, 2).loss <= init_loss + 1e-9);
  }
}

TEST_CASE("random_search") {
  data::SynthConfig dcfg;
  dcfg.n_subjects = 1;
  dcfg.trials_per_subject = 6;
  dcfg.trial_s = 15.0;
  dcfg.n_channels = 4;
  dcfg.seed = 55;
  auto samples = samples_from_dataset(dcfg, 10.0);
  std::vector<TrainSample> train_set(samples.begin(), samples.end() - 2);
  std::vector<TrainSample> val_set(samples.end() - 2, samples.end());

  SearchGrids grids;
  TrainConfig base;
  base.max_epochs = 2;
  base.batch_size = 8;
  base.seed = 31;
  base.workers = 2;

  SUBCASE("budget one returns the single sampled configuration") {
    const auto outcome = random_search(grids, 1, 4, train_set, val_set, base);
    REQUIRE(outcome.tried.size() == 1);
    CHECK(outcome.best.batch_size == outcome.tried[0].first.batch_size);
    CHECK(outcome.best.hidden == outcome.tried[0].first.hidden);
  }

  SUBCASE("samples stay inside the declared grids, winner at or below median") {
    const auto outcome = random_search(grids, 5, 4, train_set, val_set, base);
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> losses;
    for (const auto& [cfg, loss] : outcome.tried) {
      CHECK(std::count(grids.batch_sizes.begin(), grids.batch_sizes.end(),
                       cfg.batch_size) == 1);
      CHECK(std::count(grids.weight_decays.begin(), grids.weight_decays.end(),
                       cfg.weight_decay) == 1);
      CHECK(std::count(grids.dropouts.begin(), grids.dropouts.end(),
                       cfg.dropout) == 1);
      CHECK(std::count(grids.hiddens.begin(), grids.hiddens.end(),
                       cfg.hidden) == 1);
      best_loss = std::min(best_loss, loss);
      losses.push_back(loss);
    }
    std::sort(losses.begin(), losses.end());
    CHECK(best_loss <= losses[losses.size() / 2]);
  }
}

TEST_CASE("model checkpoints round-trip through float32") {
  AadnetConfig cfg;
  cfg.n_eeg_channels = 4;
  cfg.hidden = 4;
  AadnetModel model(cfg, mini_eeg_spec(), mini_audio_spec());
  model.init_params(123);

  const auto path = std::filesystem::temp_directory_path() / "aadnet.ckpt";
  model.to_checkpoint().save(path);
  AadnetModel back = AadnetModel::from_checkpoint(io::Checkpoint::load(path));
  CHECK(back.config().hidden == 4);
  CHECK(back.parameter_count() == model.parameter_count());

  // Saving the loaded model must reproduce the file bit for bit.
  const auto path2 = std::filesystem::temp_directory_path() / "aadnet2.ckpt";
  back.to_checkpoint().save(path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}
