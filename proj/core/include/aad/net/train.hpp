#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aad/net/model.hpp"
#include "aad/trial.hpp"

namespace aad::net {

struct TrainConfig {
  double lr = 5e-5;
  int batch_size = 64;
  double weight_decay = 1e-3;
  double dropout = 0.3;
  int hidden = 16;  // h; 0 omits ELU/dropout/BN/FC2 after FC1
  int patience = 5;
  int max_epochs = 100;
  double train_window_s = 10.0;  // non-overlapping training windows
  double finetune_lr_scale = 0.1;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = hardware concurrency
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool checkpointed = false;
};

struct TrainResult {
  std::vector<EpochLog> log;
  double best_val_loss = 0.0;
  int best_epoch = -1;  // -1 when no epoch improved on the initialization
};

/// Non-overlapping fixed-length training windows cut from the trials.
/// label = 0 when stream a is attended.
std::vector<TrainSample> make_training_windows(
    const std::vector<const Trial*>& trials, double window_s);

/// AdamW + cross-entropy on swap-augmented batches. A state snapshot is
/// taken whenever the validation loss improves; training stops after
/// `patience` consecutive epochs without improvement and the best snapshot
/// is restored into the model.
TrainResult train(AadnetModel& model, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set,
                  const TrainConfig& cfg);

/// Same loop at lr * finetune_lr_scale, starting from the model's current
/// (subject-independent) parameters; never leaves the model worse than its
/// initialization on the validation set.
TrainResult finetune_ss(AadnetModel& model,
                        const std::vector<TrainSample>& train_set,
                        const std::vector<TrainSample>& val_set,
                        const TrainConfig& cfg);

/// Hyperparameter grids used by the random search.
struct SearchGrids {
  std::vector<int> batch_sizes{32, 64, 128};
  std::vector<double> weight_decays{1e-4, 1e-3, 1e-2, 1e-1};
  std::vector<double> dropouts{0.5, 0.4, 0.3, 0.2, 0.1};
  std::vector<int> hiddens{32, 16, 0};
};

struct SearchOutcome {
  TrainConfig best;
  std::vector<std::pair<TrainConfig, double>> tried;  // config, val loss
};

/// Uniformly samples `budget` configurations from the grids, trains each on
/// the given split, and returns the configuration with the lowest validation
/// loss.
SearchOutcome random_search(const SearchGrids& grids, int budget,
                            int n_eeg_channels,
                            const std::vector<TrainSample>& train_set,
                            const std::vector<TrainSample>& val_set,
                            const TrainConfig& base);

/// Training log CSV: (epoch, train_loss, val_loss, val_accuracy, checkpoint).
void write_training_log(const std::filesystem::path& path,
                        const std::vector<EpochLog>& log);

}  // namespace aad::net
