#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aad/io/checkpoint.hpp"
#include "aad/nn/layers.hpp"
#include "aad/nn/optimizer.hpp"

namespace aad::net {

// ---------------------------------------------------------------------------
// Inception block specification (1-D adaptation).

enum class BranchKind { kTransform, kFeature, kPooling };

struct InceptionBranchSpec {
  BranchKind kind = BranchKind::kTransform;
  int reduce = 0;  // 1x1 reduction channels (feature branches)
  int kernel = 1;  // main kernel length
  int out = 0;     // branch output channels
};

struct InceptionSpec {
  int in_channels = 0;
  std::vector<InceptionBranchSpec> branches;

  int out_channels() const {
    int n = 0;
    for (const auto& b : branches) n += b.out;
    return n;
  }
};

/// EEG block: transform N->32; features N->16->(k19)->8, N->8->(k25)->8,
/// N->4->(k33)->8, N->2->(k39)->8; pooling (max-pool 3, stride 1) + 1x1 N->8.
InceptionSpec eeg_inception_spec(int n_channels);

/// Audio block: transform 1->1; features 1->1->(k65)->4 and 1->1->(k81)->4.
InceptionSpec audio_inception_spec();

// ---------------------------------------------------------------------------
// Parameterized layers (value + gradient accumulator).

struct ConvLayer {
  nn::Conv1dParams p;
  nn::Conv1dParams g;  // same shapes, holds accumulated gradients
};

struct DenseLayer {
  nn::DenseParams p;
  nn::DenseParams g;
};

struct BnLayer {
  nn::BatchNorm1dParams p;
  nn::Tensor g_gamma;
  nn::Tensor g_beta;
};

struct InceptionBranch {
  InceptionBranchSpec spec;
  std::optional<ConvLayer> reduce;
  ConvLayer conv;
};

struct InceptionParams {
  InceptionSpec spec;
  std::vector<InceptionBranch> branches;
};

// Forward caches.
struct BranchCache {
  nn::Tensor conv_in;   // input to the main conv (reduce/pool output, or x)
  nn::Tensor pre_relu;  // main conv output
  nn::MaxPoolCache pool;
};

struct InceptionCache {
  std::vector<BranchCache> branches;
};

/// Per-branch conv (+reduction or pooling) -> ReLU; channel concatenation.
nn::Tensor inception_forward(const InceptionParams& params,
                             const nn::Tensor& x,
                             InceptionCache* cache = nullptr);

/// Per-sample gradient tensors for one inception block, aligned with the
/// block's parameter order (reduce w/b then conv w/b per branch).
std::vector<nn::Tensor> make_inception_grad_slots(const InceptionParams& p);

/// Backward through the block; accumulates parameter grads into `slots` and
/// returns grad wrt x.
nn::Tensor inception_backward(const InceptionParams& params,
                              const InceptionCache& cache, const nn::Tensor& x,
                              const nn::Tensor& grad_out,
                              std::vector<nn::Tensor>* slots);

// ---------------------------------------------------------------------------
// Correlation layer.

struct CorrelationCache {
  nn::Tensor eeg_centered;  // [Ce, T]
  Eigen::VectorXd eeg_norm;
  nn::Tensor audio_centered_a, audio_centered_b;  // [Ca, T]
  Eigen::VectorXd audio_norm_a, audio_norm_b;
  Eigen::VectorXd features;
};

/// All (EEG channel, audio channel) Pearson pairs over time, stream a block
/// first: feature index = stream * Ce * Ca + i * Ca + j. Degenerate channels
/// yield 0.
Eigen::VectorXd correlation_layer(const nn::Tensor& eeg_feat,
                                  const nn::Tensor& audio_feat_a,
                                  const nn::Tensor& audio_feat_b,
                                  CorrelationCache* cache = nullptr);

struct CorrelationGrads {
  nn::Tensor eeg;
  nn::Tensor audio_a;
  nn::Tensor audio_b;
};

CorrelationGrads correlation_backward(const Eigen::VectorXd& grad_features,
                                      const CorrelationCache& cache);

// ---------------------------------------------------------------------------
// Full model.

struct AadnetConfig {
  int n_eeg_channels = 32;
  int hidden = 16;  // h; 0 drops ELU/dropout/BN/FC2 and maps 1296 -> 2
  double dropout_rate = 0.3;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
};

struct TrainSample {
  Eigen::MatrixXd eeg;    // N x T
  Eigen::VectorXd env_a;  // T
  Eigen::VectorXd env_b;
  int label = 0;  // index of the attended stream in input order (a=0, b=1)
};

class AadnetModel {
 public:
  explicit AadnetModel(const AadnetConfig& cfg);

  /// Same wiring with custom block specifications (e.g. a channel-reduced
  /// miniature for gradient checking). eeg_spec.in_channels must match
  /// cfg.n_eeg_channels.
  AadnetModel(const AadnetConfig& cfg, const InceptionSpec& eeg_spec,
              const InceptionSpec& audio_spec);

  void init_params(std::uint64_t seed);

  const AadnetConfig& config() const { return cfg_; }
  int feature_count() const;  // 2 * Ce * Ca

  /// Eval-mode probabilities (dropout off, running BN statistics);
  /// deterministic and safe to call concurrently.
  Eigen::Vector2d forward_eval(const Eigen::MatrixXd& eeg,
                               const Eigen::VectorXd& env_a,
                               const Eigen::VectorXd& env_b) const;

  /// Train-mode batch pass: forward, loss, backward; gradients are
  /// accumulated into the layer grad tensors (zeroed first). Bitwise
  /// deterministic in (params, batch, dropout_seed) regardless of workers.
  struct BatchStats {
    double loss = 0.0;
    double accuracy = 0.0;
  };
  BatchStats train_batch(const std::vector<const TrainSample*>& batch,
                         std::uint64_t dropout_seed, int workers);

  /// Mean eval-mode cross-entropy and accuracy over a set.
  BatchStats evaluate(const std::vector<TrainSample>& samples,
                      int workers) const;

  /// Trainable parameters (convolution/dense weights and BN affine terms).
  std::vector<nn::ParamRef> params();
  std::int64_t parameter_count() const;

  /// Trainable parameters plus BN running statistics; defines the checkpoint
  /// and snapshot payload.
  std::vector<nn::ParamRef> state();

  std::vector<nn::Tensor> snapshot_state();
  void restore_state(const std::vector<nn::Tensor>& snap);

  io::Checkpoint to_checkpoint() const;
  static AadnetModel from_checkpoint(const io::Checkpoint& ckpt);

 private:
  friend struct BatchRunner;

  AadnetConfig cfg_;
  InceptionParams eeg_incep_;
  InceptionParams audio_incep_;
  BnLayer bn_eeg_in_;
  BnLayer bn_eeg_post_;
  BnLayer bn_audio_in_;
  BnLayer bn_audio_post_;
  DenseLayer fc1_;
  BnLayer bn_head_;  // only used when hidden > 0
  DenseLayer fc2_;   // only used when hidden > 0

  std::vector<nn::ParamRef> state_refs(bool include_running);
};

/// Doubles the batch: each sample once as-is and once with the streams
/// swapped and the label flipped, so labels balance exactly.
std::vector<TrainSample> augment_swap(const std::vector<TrainSample>& batch);

}  // namespace aad::net
