#include "aad/net/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aad/errors.hpp"
#include "aad/eval/windows.hpp"
#include "aad/io/csv.hpp"
#include "aad/rng.hpp"

namespace aad::net {

std::vector<TrainSample> make_training_windows(
    const std::vector<const Trial*>& trials, double window_s) {
  std::vector<TrainSample> out;
  for (const Trial* t : trials) {
    const auto win = static_cast<Eigen::Index>(
        std::llround(window_s * t->rate));
    for (const auto& w : eval::make_windows(t->samples(), win, 0.0)) {
      TrainSample s;
      s.eeg = t->eeg.middleCols(w.start, w.length);
      s.env_a = t->env_a.segment(w.start, w.length);
      s.env_b = t->env_b.segment(w.start, w.length);
      s.label = t->attended == Stream::kA ? 0 : 1;
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

TrainResult run_training(AadnetModel& model,
                         const std::vector<TrainSample>& train_set,
                         const std::vector<TrainSample>& val_set,
                         const TrainConfig& cfg, double lr,
                         bool seed_best_from_init) {
  if (train_set.empty() || val_set.empty())
    throw_value("train: train and validation sets must be non-empty");
  if (cfg.batch_size < 1) throw_value("train: batch_size must be >= 1");

  auto params = model.params();
  nn::AdamWConfig opt_cfg;
  opt_cfg.lr = lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  nn::AdamW optimizer(opt_cfg, params);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor> best_state;
  if (seed_best_from_init) {
    result.best_val_loss = model.evaluate(val_set, cfg.workers).loss;
    best_state = model.snapshot_state();
  }

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  int stale_epochs = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    RandomStream shuffle_rng(
        derive_seed(cfg.seed, 0xe90c + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<TrainSample> raw;
      raw.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        raw.push_back(train_set[order[i]]);
      const std::vector<TrainSample> augmented = augment_swap(raw);
      std::vector<const TrainSample*> batch;
      batch.reserve(augmented.size());
      for (const auto& s : augmented) batch.push_back(&s);

      const auto stats = model.train_batch(
          batch,
          derive_seed(cfg.seed, 0xd0 + static_cast<std::uint64_t>(epoch) *
                                           1000003u +
                                           n_batches),
          cfg.workers);
      optimizer.step(params);
      epoch_loss += stats.loss;
      ++n_batches;
    }
    epoch_loss /= static_cast<double>(std::max<std::size_t>(1, n_batches));

    const auto val = model.evaluate(val_set, cfg.workers);
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss;
    log.val_loss = val.loss;
    log.val_accuracy = val.accuracy;
    if (val.loss < result.best_val_loss) {
      result.best_val_loss = val.loss;
      result.best_epoch = epoch;
      best_state = model.snapshot_state();
      log.checkpointed = true;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }
    result.log.push_back(log);
    if (stale_epochs >= cfg.patience) break;
  }

  if (!best_state.empty()) model.restore_state(best_state);
  return result;
}

}  // namespace

TrainResult train(AadnetModel& model, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set,
                  const TrainConfig& cfg) {
  return run_training(model, train_set, val_set, cfg, cfg.lr,
                      /*seed_best_from_init=*/false);
}

TrainResult finetune_ss(AadnetModel& model,
                        const std::vector<TrainSample>& train_set,
                        const std::vector<TrainSample>& val_set,
                        const TrainConfig& cfg) {
  return run_training(model, train_set, val_set, cfg,
                      cfg.lr * cfg.finetune_lr_scale,
                      /*seed_best_from_init=*/true);
}

SearchOutcome random_search(const SearchGrids& grids, int budget,
                            int n_eeg_channels,
                            const std::vector<TrainSample>& train_set,
                            const std::vector<TrainSample>& val_set,
                            const TrainConfig& base) {
  if (budget < 1) throw_value("random_search: budget must be >= 1");
  RandomStream rng(derive_seed(base.seed, 0x5ea8c4));

  SearchOutcome outcome;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int i = 0; i < budget; ++i) {
    TrainConfig cfg = base;
    cfg.batch_size = grids.batch_sizes[static_cast<std::size_t>(
        rng.uniform_below(grids.batch_sizes.size()))];
    cfg.weight_decay = grids.weight_decays[static_cast<std::size_t>(
        rng.uniform_below(grids.weight_decays.size()))];
    cfg.dropout = grids.dropouts[static_cast<std::size_t>(
        rng.uniform_below(grids.dropouts.size()))];
    cfg.hidden = grids.hiddens[static_cast<std::size_t>(
        rng.uniform_below(grids.hiddens.size()))];

    AadnetConfig net_cfg;
    net_cfg.n_eeg_channels = n_eeg_channels;
    net_cfg.hidden = cfg.hidden;
    net_cfg.dropout_rate = cfg.dropout;
    AadnetModel model(net_cfg);
    model.init_params(derive_seed(base.seed, 0x11117 + static_cast<std::uint64_t>(i)));
    const TrainResult r = train(model, train_set, val_set, cfg);
    outcome.tried.emplace_back(cfg, r.best_val_loss);
    if (r.best_val_loss < best_loss) {
      best_loss = r.best_val_loss;
      outcome.best = cfg;
    }
  }
  return outcome;
}

void write_training_log(const std::filesystem::path& path,
                        const std::vector<EpochLog>& log) {
  io::CsvWriter csv(path, {"epoch", "train_loss", "val_loss", "val_accuracy",
                           "checkpoint"});
  for (const auto& e : log)
    csv.row({io::CsvWriter::num(static_cast<std::int64_t>(e.epoch)),
             io::CsvWriter::num(e.train_loss), io::CsvWriter::num(e.val_loss),
             io::CsvWriter::num(e.val_accuracy), e.checkpointed ? "1" : "0"});
}

}  // namespace aad::net
