#include "aad/net/model.hpp"

#include <cmath>

#include "aad/nn/loss.hpp"
#include "aad/parallel.hpp"
#include "aad/rng.hpp"

namespace aad::net {

namespace {

nn::Tensor tensor_from_matrix(const Eigen::MatrixXd& m) {
  nn::Tensor t({m.rows(), m.cols()});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.at2(r, c) = m(r, c);
  return t;
}

nn::Tensor tensor_from_vector(const Eigen::VectorXd& v) {
  nn::Tensor t({1, v.size()});
  for (Eigen::Index i = 0; i < v.size(); ++i) t.data[static_cast<std::size_t>(i)] = v[i];
  return t;
}

nn::Tensor reshape(nn::Tensor t, std::vector<std::int64_t> shape) {
  if (nn::Tensor::numel_of(shape) != t.numel())
    throw_shape("reshape: cannot view ", t.shape_str(), " as requested shape");
  t.shape = std::move(shape);
  return t;
}

/// [B, C, T] batch tensor from per-sample [C, T] tensors.
nn::Tensor stack_batch(const std::vector<nn::Tensor>& xs) {
  const auto b = static_cast<std::int64_t>(xs.size());
  const std::int64_t c = xs[0].dim(0), t = xs[0].dim(1);
  nn::Tensor out({b, c, t});
  for (std::int64_t i = 0; i < b; ++i)
    std::copy(xs[static_cast<std::size_t>(i)].data.begin(),
              xs[static_cast<std::size_t>(i)].data.end(),
              out.data.begin() + i * c * t);
  return out;
}

std::vector<nn::Tensor> unstack_batch(const nn::Tensor& x) {
  const std::int64_t b = x.dim(0), c = x.dim(1), t = x.dim(2);
  std::vector<nn::Tensor> out;
  out.reserve(static_cast<std::size_t>(b));
  for (std::int64_t i = 0; i < b; ++i) {
    nn::Tensor s({c, t});
    std::copy(x.data.begin() + i * c * t, x.data.begin() + (i + 1) * c * t,
              s.data.begin());
    out.push_back(std::move(s));
  }
  return out;
}

ConvLayer make_conv(int c_in, int k, int c_out) {
  ConvLayer l;
  l.p.weight = nn::Tensor({c_out, c_in, k});
  l.p.bias = nn::Tensor({c_out});
  l.g.weight = nn::Tensor({c_out, c_in, k});
  l.g.bias = nn::Tensor({c_out});
  return l;
}

DenseLayer make_dense(std::int64_t f_in, std::int64_t f_out) {
  DenseLayer l;
  l.p.weight = nn::Tensor({f_out, f_in});
  l.p.bias = nn::Tensor({f_out});
  l.g.weight = nn::Tensor({f_out, f_in});
  l.g.bias = nn::Tensor({f_out});
  return l;
}

BnLayer make_bn(std::int64_t channels, double momentum, double eps) {
  BnLayer l;
  l.p = nn::make_batchnorm(channels, momentum, eps);
  l.g_gamma = nn::Tensor({channels});
  l.g_beta = nn::Tensor({channels});
  return l;
}

void he_init(nn::Tensor& w, double fan_in, RandomStream& rng) {
  const double scale = std::sqrt(2.0 / fan_in);
  for (double& v : w.data) v = rng.normal() * scale;
}

void acc_into(nn::Tensor& dst, const nn::Tensor& src) {
  nn::check_same_shape(dst, src, "gradient accumulation");
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

constexpr int kMinInputSamples = 64;  // 1 s at 64 Hz

}  // namespace

// ---------------------------------------------------------------------------

InceptionSpec eeg_inception_spec(int n_channels) {
  InceptionSpec s;
  s.in_channels = n_channels;
  s.branches = {
      {BranchKind::kTransform, 0, 1, 32},
      {BranchKind::kFeature, 16, 19, 8},
      {BranchKind::kFeature, 8, 25, 8},
      {BranchKind::kFeature, 4, 33, 8},
      {BranchKind::kFeature, 2, 39, 8},
      {BranchKind::kPooling, 0, 1, 8},
  };
  return s;
}

InceptionSpec audio_inception_spec() {
  InceptionSpec s;
  s.in_channels = 1;
  s.branches = {
      {BranchKind::kTransform, 0, 1, 1},
      {BranchKind::kFeature, 1, 65, 4},
      {BranchKind::kFeature, 1, 81, 4},
  };
  return s;
}

namespace {

InceptionParams make_inception(const InceptionSpec& spec) {
  InceptionParams p;
  p.spec = spec;
  for (const auto& b : spec.branches) {
    InceptionBranch branch;
    branch.spec = b;
    switch (b.kind) {
      case BranchKind::kTransform:
        branch.conv = make_conv(spec.in_channels, 1, b.out);
        break;
      case BranchKind::kFeature:
        branch.reduce = make_conv(spec.in_channels, 1, b.reduce);
        branch.conv = make_conv(b.reduce, b.kernel, b.out);
        break;
      case BranchKind::kPooling:
        // max-pool k=3 stride 1 (same length) feeding a 1x1 projection
        branch.conv = make_conv(spec.in_channels, 1, b.out);
        break;
    }
    p.branches.push_back(std::move(branch));
  }
  return p;
}

}  // namespace

nn::Tensor inception_forward(const InceptionParams& params, const nn::Tensor& x,
                             InceptionCache* cache) {
  if (x.rank() != 2 || x.dim(0) != params.spec.in_channels)
    throw_shape("inception: expected input [", params.spec.in_channels,
                ", T], got ", x.shape_str());
  const std::int64_t t_len = x.dim(1);
  nn::Tensor out({params.spec.out_channels(), t_len});
  if (cache != nullptr) cache->branches.resize(params.branches.size());

  std::int64_t row = 0;
  for (std::size_t bi = 0; bi < params.branches.size(); ++bi) {
    const auto& b = params.branches[bi];
    BranchCache local;
    BranchCache* bc = cache != nullptr ? &cache->branches[bi] : &local;
    switch (b.spec.kind) {
      case BranchKind::kTransform:
        bc->conv_in = x;
        break;
      case BranchKind::kFeature:
        bc->conv_in = conv1d(x, b.reduce->p);
        break;
      case BranchKind::kPooling:
        bc->conv_in = maxpool1d_same(x, 3, &bc->pool);
        break;
    }
    bc->pre_relu = conv1d(bc->conv_in, b.conv.p);
    const nn::Tensor activated = nn::relu(bc->pre_relu);
    std::copy(activated.data.begin(), activated.data.end(),
              out.data.begin() + row * t_len);
    row += b.spec.out;
  }
  return out;
}

std::vector<nn::Tensor> make_inception_grad_slots(const InceptionParams& p) {
  std::vector<nn::Tensor> slots;
  for (const auto& b : p.branches) {
    if (b.reduce.has_value()) {
      slots.emplace_back(b.reduce->p.weight.shape);
      slots.emplace_back(b.reduce->p.bias.shape);
    }
    slots.emplace_back(b.conv.p.weight.shape);
    slots.emplace_back(b.conv.p.bias.shape);
  }
  return slots;
}

nn::Tensor inception_backward(const InceptionParams& params,
                              const InceptionCache& cache, const nn::Tensor& x,
                              const nn::Tensor& grad_out,
                              std::vector<nn::Tensor>* slots) {
  const std::int64_t t_len = x.dim(1);
  nn::Tensor grad_x(x.shape);
  std::int64_t row = 0;
  std::size_t slot = 0;
  for (std::size_t bi = 0; bi < params.branches.size(); ++bi) {
    const auto& b = params.branches[bi];
    const auto& bc = cache.branches[bi];

    nn::Tensor g_branch({b.spec.out, t_len});
    std::copy(grad_out.data.begin() + row * t_len,
              grad_out.data.begin() + (row + b.spec.out) * t_len,
              g_branch.data.begin());
    row += b.spec.out;

    const nn::Tensor g_pre = nn::relu_backward(g_branch, bc.pre_relu);

    nn::Tensor* g_reduce_w = nullptr;
    nn::Tensor* g_reduce_b = nullptr;
    if (b.reduce.has_value()) {
      g_reduce_w = &(*slots)[slot++];
      g_reduce_b = &(*slots)[slot++];
    }
    nn::Tensor& g_conv_w = (*slots)[slot++];
    nn::Tensor& g_conv_b = (*slots)[slot++];

    nn::Tensor g_conv_in(bc.conv_in.shape);
    conv1d_backward_acc(g_pre, bc.conv_in, b.conv.p, &g_conv_in, g_conv_w,
                        g_conv_b);
    switch (b.spec.kind) {
      case BranchKind::kTransform:
        for (std::size_t i = 0; i < grad_x.data.size(); ++i)
          grad_x.data[i] += g_conv_in.data[i];
        break;
      case BranchKind::kFeature:
        conv1d_backward_acc(g_conv_in, x, b.reduce->p, &grad_x, *g_reduce_w,
                            *g_reduce_b);
        break;
      case BranchKind::kPooling: {
        const nn::Tensor g_pool = nn::maxpool1d_backward(g_conv_in, bc.pool);
        for (std::size_t i = 0; i < grad_x.data.size(); ++i)
          grad_x.data[i] += g_pool.data[i];
        break;
      }
    }
  }
  return grad_x;
}

// ---------------------------------------------------------------------------
// Correlation layer.

namespace {

void center_rows(const nn::Tensor& x, nn::Tensor* centered,
                 Eigen::VectorXd* norms) {
  const std::int64_t c = x.dim(0), t_len = x.dim(1);
  *centered = nn::Tensor(x.shape);
  norms->resize(c);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double* row = x.ptr() + ch * t_len;
    double mean = 0.0;
    for (std::int64_t t = 0; t < t_len; ++t) mean += row[t];
    mean /= static_cast<double>(t_len);
    double* out = centered->ptr() + ch * t_len;
    double ss = 0.0;
    for (std::int64_t t = 0; t < t_len; ++t) {
      out[t] = row[t] - mean;
      ss += out[t] * out[t];
    }
    (*norms)[ch] = std::sqrt(ss);
  }
}

void correlate_block(const nn::Tensor& eeg_c, const Eigen::VectorXd& eeg_n,
                     const nn::Tensor& aud_c, const Eigen::VectorXd& aud_n,
                     double* out) {
  const std::int64_t ce = eeg_c.dim(0), ca = aud_c.dim(0),
                     t_len = eeg_c.dim(1);
  for (std::int64_t i = 0; i < ce; ++i) {
    const double* u = eeg_c.ptr() + i * t_len;
    for (std::int64_t j = 0; j < ca; ++j) {
      const double* v = aud_c.ptr() + j * t_len;
      const double denom = eeg_n[i] * aud_n[j];
      if (denom <= 0.0) {
        out[i * ca + j] = 0.0;  // degenerate channel
        continue;
      }
      double dot = 0.0;
      for (std::int64_t t = 0; t < t_len; ++t) dot += u[t] * v[t];
      out[i * ca + j] = dot / denom;
    }
  }
}

}  // namespace

Eigen::VectorXd correlation_layer(const nn::Tensor& eeg_feat,
                                  const nn::Tensor& audio_feat_a,
                                  const nn::Tensor& audio_feat_b,
                                  CorrelationCache* cache) {
  if (eeg_feat.rank() != 2 || audio_feat_a.rank() != 2 ||
      audio_feat_b.rank() != 2)
    throw_shape("correlation layer expects rank-2 feature maps");
  if (eeg_feat.dim(1) != audio_feat_a.dim(1) ||
      eeg_feat.dim(1) != audio_feat_b.dim(1))
    throw_shape("correlation layer: temporal lengths differ (eeg ",
                eeg_feat.dim(1), ", audio ", audio_feat_a.dim(1), "/",
                audio_feat_b.dim(1), ")");
  if (eeg_feat.dim(1) < 2)
    throw_value("correlation layer needs >= 2 time samples, got ",
                eeg_feat.dim(1));
  const std::int64_t ce = eeg_feat.dim(0), ca = audio_feat_a.dim(0);

  CorrelationCache local;
  CorrelationCache* cc = cache != nullptr ? cache : &local;
  center_rows(eeg_feat, &cc->eeg_centered, &cc->eeg_norm);
  center_rows(audio_feat_a, &cc->audio_centered_a, &cc->audio_norm_a);
  center_rows(audio_feat_b, &cc->audio_centered_b, &cc->audio_norm_b);

  Eigen::VectorXd features(2 * ce * ca);
  correlate_block(cc->eeg_centered, cc->eeg_norm, cc->audio_centered_a,
                  cc->audio_norm_a, features.data());
  correlate_block(cc->eeg_centered, cc->eeg_norm, cc->audio_centered_b,
                  cc->audio_norm_b, features.data() + ce * ca);
  cc->features = features;
  return features;
}

namespace {

/// d r / d u and d r / d v for r = <u, v> / (|u| |v|) with centered u, v;
/// both terms are already zero-mean, so no centering projector is needed.
void correlation_backward_block(const Eigen::VectorXd& grad,
                                Eigen::Index offset, const nn::Tensor& eeg_c,
                                const Eigen::VectorXd& eeg_n,
                                const nn::Tensor& aud_c,
                                const Eigen::VectorXd& aud_n,
                                const Eigen::VectorXd& features,
                                nn::Tensor* g_eeg, nn::Tensor* g_aud) {
  const std::int64_t ce = eeg_c.dim(0), ca = aud_c.dim(0),
                     t_len = eeg_c.dim(1);
  for (std::int64_t i = 0; i < ce; ++i) {
    const double* u = eeg_c.ptr() + i * t_len;
    double* gu = g_eeg->ptr() + i * t_len;
    for (std::int64_t j = 0; j < ca; ++j) {
      const double g = grad[offset + i * ca + j];
      if (g == 0.0) continue;
      const double denom = eeg_n[i] * aud_n[j];
      if (denom <= 0.0) continue;  // degenerate pair had zero output
      const double r = features[offset + i * ca + j];
      const double* v = aud_c.ptr() + j * t_len;
      double* gv = g_aud->ptr() + j * t_len;
      const double ku_v = g / denom;
      const double ku_u = g * r / (eeg_n[i] * eeg_n[i]);
      const double kv_v = g * r / (aud_n[j] * aud_n[j]);
      for (std::int64_t t = 0; t < t_len; ++t) {
        gu[t] += ku_v * v[t] - ku_u * u[t];
        gv[t] += ku_v * u[t] - kv_v * v[t];
      }
    }
  }
}

}  // namespace

CorrelationGrads correlation_backward(const Eigen::VectorXd& grad_features,
                                      const CorrelationCache& cache) {
  const std::int64_t ce = cache.eeg_centered.dim(0);
  const std::int64_t ca = cache.audio_centered_a.dim(0);
  if (grad_features.size() != 2 * ce * ca)
    throw_shape("correlation_backward: grad size ", grad_features.size(),
                " vs features ", 2 * ce * ca);
  CorrelationGrads g;
  g.eeg = nn::Tensor(cache.eeg_centered.shape);
  g.audio_a = nn::Tensor(cache.audio_centered_a.shape);
  g.audio_b = nn::Tensor(cache.audio_centered_b.shape);
  correlation_backward_block(grad_features, 0, cache.eeg_centered,
                             cache.eeg_norm, cache.audio_centered_a,
                             cache.audio_norm_a, cache.features, &g.eeg,
                             &g.audio_a);
  correlation_backward_block(grad_features, ce * ca, cache.eeg_centered,
                             cache.eeg_norm, cache.audio_centered_b,
                             cache.audio_norm_b, cache.features, &g.eeg,
                             &g.audio_b);
  return g;
}

namespace {

/// Sums per-sample gradient slots into the block's grad tensors, in sample
/// order so results do not depend on the worker count.
void reduce_inception_slots(InceptionParams& p,
                            const std::vector<std::vector<nn::Tensor>>& slots) {
  for (const auto& sample : slots) {
    std::size_t s = 0;
    for (auto& b : p.branches) {
      if (b.reduce.has_value()) {
        acc_into(b.reduce->g.weight, sample[s++]);
        acc_into(b.reduce->g.bias, sample[s++]);
      }
      acc_into(b.conv.g.weight, sample[s++]);
      acc_into(b.conv.g.bias, sample[s++]);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Model.

AadnetModel::AadnetModel(const AadnetConfig& cfg)
    : AadnetModel(cfg, eeg_inception_spec(cfg.n_eeg_channels),
                  audio_inception_spec()) {}

AadnetModel::AadnetModel(const AadnetConfig& cfg,
                         const InceptionSpec& eeg_spec,
                         const InceptionSpec& audio_spec)
    : cfg_(cfg) {
  if (cfg.n_eeg_channels < 2)
    throw_value("aadnet: need >= 2 EEG channels, got ", cfg.n_eeg_channels);
  if (cfg.hidden < 0) throw_value("aadnet: hidden must be >= 0");
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0)
    throw_value("aadnet: dropout rate outside [0, 1): ", cfg.dropout_rate);
  if (eeg_spec.in_channels != cfg.n_eeg_channels)
    throw_shape("aadnet: eeg spec expects ", eeg_spec.in_channels,
                " channels, config says ", cfg.n_eeg_channels);

  eeg_incep_ = make_inception(eeg_spec);
  audio_incep_ = make_inception(audio_spec);
  bn_eeg_in_ = make_bn(cfg.n_eeg_channels, cfg.bn_momentum, cfg.bn_eps);
  bn_eeg_post_ =
      make_bn(eeg_incep_.spec.out_channels(), cfg.bn_momentum, cfg.bn_eps);
  bn_audio_in_ = make_bn(1, cfg.bn_momentum, cfg.bn_eps);
  bn_audio_post_ =
      make_bn(audio_incep_.spec.out_channels(), cfg.bn_momentum, cfg.bn_eps);

  const std::int64_t features = feature_count();
  if (cfg.hidden > 0) {
    fc1_ = make_dense(features, cfg.hidden);
    bn_head_ = make_bn(cfg.hidden, cfg.bn_momentum, cfg.bn_eps);
    fc2_ = make_dense(cfg.hidden, 2);
  } else {
    fc1_ = make_dense(features, 2);
  }
}

int AadnetModel::feature_count() const {
  return 2 * eeg_incep_.spec.out_channels() *
         audio_incep_.spec.out_channels();
}

void AadnetModel::init_params(std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, 0xaadbe7));
  auto init_incep = [&](InceptionParams& p) {
    for (auto& b : p.branches) {
      if (b.reduce.has_value()) {
        he_init(b.reduce->p.weight,
                static_cast<double>(b.reduce->p.weight.dim(1)), rng);
        b.reduce->p.bias.fill(0.0);
      }
      he_init(b.conv.p.weight,
              static_cast<double>(b.conv.p.weight.dim(1) *
                                  b.conv.p.weight.dim(2)),
              rng);
      b.conv.p.bias.fill(0.0);
    }
  };
  init_incep(eeg_incep_);
  init_incep(audio_incep_);
  he_init(fc1_.p.weight, static_cast<double>(fc1_.p.weight.dim(1)), rng);
  fc1_.p.bias.fill(0.0);
  if (cfg_.hidden > 0) {
    he_init(fc2_.p.weight, static_cast<double>(fc2_.p.weight.dim(1)), rng);
    fc2_.p.bias.fill(0.0);
  }
}

namespace {

void add_conv_refs(const std::string& prefix, ConvLayer& l,
                   std::vector<nn::ParamRef>* out) {
  out->push_back({prefix + ".weight", &l.p.weight, &l.g.weight});
  out->push_back({prefix + ".bias", &l.p.bias, &l.g.bias});
}

void add_incep_refs(const std::string& prefix, InceptionParams& p,
                    std::vector<nn::ParamRef>* out) {
  for (std::size_t i = 0; i < p.branches.size(); ++i) {
    auto& b = p.branches[i];
    const std::string bp = prefix + ".b" + std::to_string(i);
    if (b.reduce.has_value()) add_conv_refs(bp + ".reduce", *b.reduce, out);
    add_conv_refs(bp + ".conv", b.conv, out);
  }
}

void add_bn_refs(const std::string& prefix, BnLayer& l, bool include_running,
                 std::vector<nn::ParamRef>* out) {
  out->push_back({prefix + ".gamma", &l.p.gamma, &l.g_gamma});
  out->push_back({prefix + ".beta", &l.p.beta, &l.g_beta});
  if (include_running) {
    out->push_back({prefix + ".running_mean", &l.p.running_mean, nullptr});
    out->push_back({prefix + ".running_var", &l.p.running_var, nullptr});
  }
}

}  // namespace

std::vector<nn::ParamRef> AadnetModel::state_refs(bool include_running) {
  std::vector<nn::ParamRef> refs;
  add_bn_refs("eeg.bn_in", bn_eeg_in_, include_running, &refs);
  add_incep_refs("eeg.incep", eeg_incep_, &refs);
  add_bn_refs("eeg.bn_post", bn_eeg_post_, include_running, &refs);
  add_bn_refs("audio.bn_in", bn_audio_in_, include_running, &refs);
  add_incep_refs("audio.incep", audio_incep_, &refs);
  add_bn_refs("audio.bn_post", bn_audio_post_, include_running, &refs);
  refs.push_back({"head.fc1.weight", &fc1_.p.weight, &fc1_.g.weight});
  refs.push_back({"head.fc1.bias", &fc1_.p.bias, &fc1_.g.bias});
  if (cfg_.hidden > 0) {
    add_bn_refs("head.bn", bn_head_, include_running, &refs);
    refs.push_back({"head.fc2.weight", &fc2_.p.weight, &fc2_.g.weight});
    refs.push_back({"head.fc2.bias", &fc2_.p.bias, &fc2_.g.bias});
  }
  return refs;
}

std::vector<nn::ParamRef> AadnetModel::params() { return state_refs(false); }

std::vector<nn::ParamRef> AadnetModel::state() { return state_refs(true); }

std::int64_t AadnetModel::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& ref : const_cast<AadnetModel*>(this)->params())
    n += ref.value->numel();
  return n;
}

std::vector<nn::Tensor> AadnetModel::snapshot_state() {
  std::vector<nn::Tensor> snap;
  for (const auto& ref : state()) snap.push_back(*ref.value);
  return snap;
}

void AadnetModel::restore_state(const std::vector<nn::Tensor>& snap) {
  auto refs = state();
  if (snap.size() != refs.size())
    throw_shape("restore_state: snapshot has ", snap.size(), " tensors, ",
                "model expects ", refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    check_same_shape(*refs[i].value, snap[i], "restore_state");
    *refs[i].value = snap[i];
  }
}

namespace {

/// Block layout as a [branches, 4] tensor: kind, reduce, kernel, out.
void put_spec(io::Checkpoint* ckpt, const std::string& name,
              const InceptionSpec& spec) {
  std::vector<double> rows;
  for (const auto& b : spec.branches) {
    rows.push_back(static_cast<double>(b.kind));
    rows.push_back(b.reduce);
    rows.push_back(b.kernel);
    rows.push_back(b.out);
  }
  ckpt->put_doubles(name, {static_cast<std::int64_t>(spec.branches.size()), 4},
                    rows);
}

InceptionSpec get_spec(const io::Checkpoint& ckpt, const std::string& name,
                       int in_channels) {
  const auto& e = ckpt.get(name);
  InceptionSpec spec;
  spec.in_channels = in_channels;
  for (std::int64_t b = 0; b < e.shape[0]; ++b) {
    InceptionBranchSpec branch;
    branch.kind = static_cast<BranchKind>(
        static_cast<int>(e.values[static_cast<std::size_t>(4 * b)]));
    branch.reduce =
        static_cast<int>(e.values[static_cast<std::size_t>(4 * b + 1)]);
    branch.kernel =
        static_cast<int>(e.values[static_cast<std::size_t>(4 * b + 2)]);
    branch.out =
        static_cast<int>(e.values[static_cast<std::size_t>(4 * b + 3)]);
    spec.branches.push_back(branch);
  }
  return spec;
}

}  // namespace

io::Checkpoint AadnetModel::to_checkpoint() const {
  io::Checkpoint ckpt;
  ckpt.put_scalar("config/n_eeg_channels", cfg_.n_eeg_channels);
  ckpt.put_scalar("config/hidden", cfg_.hidden);
  ckpt.put_scalar("config/dropout_rate", cfg_.dropout_rate);
  ckpt.put_scalar("config/bn_momentum", cfg_.bn_momentum);
  ckpt.put_scalar("config/bn_eps", cfg_.bn_eps);
  put_spec(&ckpt, "config/eeg_spec", eeg_incep_.spec);
  put_spec(&ckpt, "config/audio_spec", audio_incep_.spec);
  for (const auto& ref : const_cast<AadnetModel*>(this)->state())
    ckpt.put_doubles(ref.name, ref.value->shape, ref.value->data);
  return ckpt;
}

AadnetModel AadnetModel::from_checkpoint(const io::Checkpoint& ckpt) {
  AadnetConfig cfg;
  cfg.n_eeg_channels =
      static_cast<int>(ckpt.get_scalar("config/n_eeg_channels"));
  cfg.hidden = static_cast<int>(ckpt.get_scalar("config/hidden"));
  cfg.dropout_rate = ckpt.get_scalar("config/dropout_rate");
  cfg.bn_momentum = ckpt.get_scalar("config/bn_momentum");
  cfg.bn_eps = ckpt.get_scalar("config/bn_eps");
  AadnetModel model(cfg, get_spec(ckpt, "config/eeg_spec", cfg.n_eeg_channels),
                    get_spec(ckpt, "config/audio_spec", 1));
  for (const auto& ref : model.state()) {
    const auto& entry = ckpt.get(ref.name);
    if (entry.shape != ref.value->shape)
      throw_io("checkpoint tensor '", ref.name, "' has wrong shape");
    for (std::size_t i = 0; i < entry.values.size(); ++i)
      ref.value->data[i] = static_cast<double>(entry.values[i]);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Eval-mode forward.

Eigen::Vector2d AadnetModel::forward_eval(const Eigen::MatrixXd& eeg,
                                          const Eigen::VectorXd& env_a,
                                          const Eigen::VectorXd& env_b) const {
  if (eeg.rows() != cfg_.n_eeg_channels)
    throw_shape("aadnet: expected ", cfg_.n_eeg_channels,
                " EEG channels, got ", eeg.rows());
  if (eeg.cols() != env_a.size() || eeg.cols() != env_b.size())
    throw_shape("aadnet: stream lengths differ (eeg ", eeg.cols(), ", env_a ",
                env_a.size(), ", env_b ", env_b.size(), ")");
  if (eeg.cols() < kMinInputSamples)
    throw_value("aadnet: input too short, need >= ", kMinInputSamples,
                " samples, got ", eeg.cols());

  auto branch_eval = [](const BnLayer& bn_in, const InceptionParams& incep,
                        const BnLayer& bn_post, const nn::Tensor& x) {
    const nn::Tensor x0 = unstack_batch(nn::batchnorm1d_eval(
        stack_batch({x}), bn_in.p))[0];
    const nn::Tensor cat = inception_forward(incep, x0);
    const nn::Tensor pooled = nn::maxpool1d(cat, 3, 3);
    return unstack_batch(
        nn::batchnorm1d_eval(stack_batch({pooled}), bn_post.p))[0];
  };

  const nn::Tensor e2 =
      branch_eval(bn_eeg_in_, eeg_incep_, bn_eeg_post_, tensor_from_matrix(eeg));
  const nn::Tensor a2 = branch_eval(bn_audio_in_, audio_incep_,
                                    bn_audio_post_, tensor_from_vector(env_a));
  const nn::Tensor b2 = branch_eval(bn_audio_in_, audio_incep_,
                                    bn_audio_post_, tensor_from_vector(env_b));

  const Eigen::VectorXd features = correlation_layer(e2, a2, b2);
  nn::Tensor f({1, features.size()});
  for (Eigen::Index i = 0; i < features.size(); ++i)
    f.data[static_cast<std::size_t>(i)] = features[i];

  nn::Tensor logits = nn::dense(f, fc1_.p);
  if (cfg_.hidden > 0) {
    nn::Tensor h = nn::elu(logits);
    h = nn::batchnorm1d_eval(reshape(std::move(h), {1, cfg_.hidden, 1}),
                             bn_head_.p);
    logits = nn::dense(reshape(std::move(h), {1, cfg_.hidden}), fc2_.p);
  }
  const nn::Tensor probs = nn::softmax_lastdim(logits);
  return {probs.data[0], probs.data[1]};
}

// ---------------------------------------------------------------------------
// Train-mode batch pass.

AadnetModel::BatchStats AadnetModel::train_batch(
    const std::vector<const TrainSample*>& batch, std::uint64_t dropout_seed,
    int workers) {
  if (batch.empty()) throw_value("train_batch: empty batch");
  const auto b_sz = static_cast<std::int64_t>(batch.size());
  nn::zero_grads(params());

  // Assemble inputs; audio streams stacked a-block then b-block (the shared
  // audio branch sees both streams as one batch of 2B).
  std::vector<nn::Tensor> eeg_in, aud_in;
  std::vector<int> labels;
  eeg_in.reserve(batch.size());
  aud_in.reserve(batch.size() * 2);
  for (const TrainSample* s : batch) {
    if (s->eeg.cols() < kMinInputSamples)
      throw_value("train_batch: sample shorter than ", kMinInputSamples,
                  " samples");
    eeg_in.push_back(tensor_from_matrix(s->eeg));
    labels.push_back(s->label);
  }
  for (const TrainSample* s : batch) aud_in.push_back(tensor_from_vector(s->env_a));
  for (const TrainSample* s : batch) aud_in.push_back(tensor_from_vector(s->env_b));

  // Input batch norms.
  nn::BatchNormCache bn_eeg_in_cache, bn_aud_in_cache;
  const std::vector<nn::Tensor> x0 = unstack_batch(nn::batchnorm1d_train(
      stack_batch(eeg_in), bn_eeg_in_.p, &bn_eeg_in_cache));
  const std::vector<nn::Tensor> y0 = unstack_batch(nn::batchnorm1d_train(
      stack_batch(aud_in), bn_audio_in_.p, &bn_aud_in_cache));

  // Inception + pool, parallel over samples.
  std::vector<InceptionCache> eeg_ic(batch.size());
  std::vector<nn::MaxPoolCache> eeg_pc(batch.size());
  std::vector<nn::Tensor> e1(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    const nn::Tensor cat = inception_forward(eeg_incep_, x0[i], &eeg_ic[i]);
    e1[i] = nn::maxpool1d(cat, 3, 3, &eeg_pc[i]);
  });
  std::vector<InceptionCache> aud_ic(aud_in.size());
  std::vector<nn::MaxPoolCache> aud_pc(aud_in.size());
  std::vector<nn::Tensor> a1(aud_in.size());
  parallel_for(aud_in.size(), workers, [&](std::size_t i) {
    const nn::Tensor cat = inception_forward(audio_incep_, y0[i], &aud_ic[i]);
    a1[i] = nn::maxpool1d(cat, 3, 3, &aud_pc[i]);
  });

  // Post batch norms.
  nn::BatchNormCache bn_eeg_post_cache, bn_aud_post_cache;
  const std::vector<nn::Tensor> e2 = unstack_batch(nn::batchnorm1d_train(
      stack_batch(e1), bn_eeg_post_.p, &bn_eeg_post_cache));
  const std::vector<nn::Tensor> a2 = unstack_batch(nn::batchnorm1d_train(
      stack_batch(a1), bn_audio_post_.p, &bn_aud_post_cache));

  // Correlation features.
  const std::int64_t n_features = feature_count();
  std::vector<CorrelationCache> corr(batch.size());
  nn::Tensor feats({b_sz, n_features});
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    const Eigen::VectorXd f = correlation_layer(
        e2[i], a2[i], a2[batch.size() + i], &corr[i]);
    std::copy(f.data(), f.data() + f.size(),
              feats.ptr() + static_cast<std::int64_t>(i) * n_features);
  });

  // Head.
  nn::DropoutCache do1, do2;
  const nn::Tensor h1 = nn::dropout(feats, cfg_.dropout_rate, nn::Mode::kTrain,
                                    derive_seed(dropout_seed, 1), &do1);
  const nn::Tensor z1 = nn::dense(h1, fc1_.p);
  nn::Tensor logits;
  nn::Tensor elu_out, h2, bn_in_view, bn_out;
  nn::BatchNormCache bn_head_cache;
  if (cfg_.hidden > 0) {
    elu_out = nn::elu(z1);
    h2 = nn::dropout(elu_out, cfg_.dropout_rate, nn::Mode::kTrain,
                     derive_seed(dropout_seed, 2), &do2);
    bn_in_view = reshape(h2, {b_sz, cfg_.hidden, 1});
    bn_out = nn::batchnorm1d_train(bn_in_view, bn_head_.p, &bn_head_cache);
    logits = nn::dense(reshape(bn_out, {b_sz, cfg_.hidden}), fc2_.p);
  } else {
    logits = z1;
  }

  const nn::CrossEntropyResult ce = nn::softmax_cross_entropy(logits, labels);
  if (!std::isfinite(ce.loss))
    throw_value("train_batch: non-finite loss (", ce.loss, ")");
  BatchStats stats;
  stats.loss = ce.loss;
  std::int64_t correct = 0;
  for (std::int64_t i = 0; i < b_sz; ++i) {
    const int pred = ce.probabilities.at2(i, 1) > ce.probabilities.at2(i, 0)
                         ? 1
                         : 0;
    if (pred == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(b_sz);

  // ----- Backward.
  nn::Tensor g_feats;
  {
    nn::Tensor g = ce.grad_logits;
    if (cfg_.hidden > 0) {
      nn::DenseGrads dg2 =
          nn::dense_backward(g, reshape(bn_out, {b_sz, cfg_.hidden}), fc2_.p);
      acc_into(fc2_.g.weight, dg2.weight);
      acc_into(fc2_.g.bias, dg2.bias);
      nn::BatchNormGrads bg = nn::batchnorm1d_backward(
          reshape(dg2.input, {b_sz, cfg_.hidden, 1}), bn_head_cache,
          bn_head_.p);
      acc_into(bn_head_.g_gamma, bg.gamma);
      acc_into(bn_head_.g_beta, bg.beta);
      nn::Tensor g_h2 =
          nn::dropout_backward(reshape(bg.input, {b_sz, cfg_.hidden}), do2);
      g = nn::elu_backward(g_h2, z1);
    }
    nn::DenseGrads dg1 = nn::dense_backward(g, h1, fc1_.p);
    acc_into(fc1_.g.weight, dg1.weight);
    acc_into(fc1_.g.bias, dg1.bias);
    g_feats = nn::dropout_backward(dg1.input, do1);
  }

  // Correlation backward, parallel over samples.
  std::vector<nn::Tensor> g_e2(batch.size());
  std::vector<nn::Tensor> g_a2(aud_in.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    Eigen::VectorXd gf(n_features);
    std::copy(g_feats.ptr() + static_cast<std::int64_t>(i) * n_features,
              g_feats.ptr() + static_cast<std::int64_t>(i + 1) * n_features,
              gf.data());
    CorrelationGrads cg = correlation_backward(gf, corr[i]);
    g_e2[i] = std::move(cg.eeg);
    g_a2[i] = std::move(cg.audio_a);
    g_a2[batch.size() + i] = std::move(cg.audio_b);
  });

  // Post BN backward.
  nn::BatchNormGrads eeg_post_bg = nn::batchnorm1d_backward(
      stack_batch(g_e2), bn_eeg_post_cache, bn_eeg_post_.p);
  acc_into(bn_eeg_post_.g_gamma, eeg_post_bg.gamma);
  acc_into(bn_eeg_post_.g_beta, eeg_post_bg.beta);
  const std::vector<nn::Tensor> g_e1 = unstack_batch(eeg_post_bg.input);

  nn::BatchNormGrads aud_post_bg = nn::batchnorm1d_backward(
      stack_batch(g_a2), bn_aud_post_cache, bn_audio_post_.p);
  acc_into(bn_audio_post_.g_gamma, aud_post_bg.gamma);
  acc_into(bn_audio_post_.g_beta, aud_post_bg.beta);
  const std::vector<nn::Tensor> g_a1 = unstack_batch(aud_post_bg.input);

  // Branch backward with per-sample gradient slots, then an ordered reduce.
  std::vector<std::vector<nn::Tensor>> eeg_slots(batch.size());
  std::vector<nn::Tensor> g_x0(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    eeg_slots[i] = make_inception_grad_slots(eeg_incep_);
    const nn::Tensor g_cat = nn::maxpool1d_backward(g_e1[i], eeg_pc[i]);
    g_x0[i] =
        inception_backward(eeg_incep_, eeg_ic[i], x0[i], g_cat, &eeg_slots[i]);
  });
  std::vector<std::vector<nn::Tensor>> aud_slots(aud_in.size());
  std::vector<nn::Tensor> g_y0(aud_in.size());
  parallel_for(aud_in.size(), workers, [&](std::size_t i) {
    aud_slots[i] = make_inception_grad_slots(audio_incep_);
    const nn::Tensor g_cat = nn::maxpool1d_backward(g_a1[i], aud_pc[i]);
    g_y0[i] = inception_backward(audio_incep_, aud_ic[i], y0[i], g_cat,
                                 &aud_slots[i]);
  });
  reduce_inception_slots(eeg_incep_, eeg_slots);
  reduce_inception_slots(audio_incep_, aud_slots);

  // Input BN backward (gradients wrt the raw inputs are discarded).
  nn::BatchNormGrads eeg_in_bg = nn::batchnorm1d_backward(
      stack_batch(g_x0), bn_eeg_in_cache, bn_eeg_in_.p);
  acc_into(bn_eeg_in_.g_gamma, eeg_in_bg.gamma);
  acc_into(bn_eeg_in_.g_beta, eeg_in_bg.beta);
  nn::BatchNormGrads aud_in_bg = nn::batchnorm1d_backward(
      stack_batch(g_y0), bn_aud_in_cache, bn_audio_in_.p);
  acc_into(bn_audio_in_.g_gamma, aud_in_bg.gamma);
  acc_into(bn_audio_in_.g_beta, aud_in_bg.beta);

  return stats;
}

AadnetModel::BatchStats AadnetModel::evaluate(
    const std::vector<TrainSample>& samples, int workers) const {
  if (samples.empty()) throw_value("evaluate: empty sample set");
  std::vector<double> losses(samples.size());
  std::vector<int> hits(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const Eigen::Vector2d p =
        forward_eval(samples[i].eeg, samples[i].env_a, samples[i].env_b);
    const int label = samples[i].label;
    losses[i] = -std::log(std::max(p[label], 1e-300));
    hits[i] = (p[1] > p[0] ? 1 : 0) == label ? 1 : 0;
  });
  BatchStats stats;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    stats.loss += losses[i];
    stats.accuracy += hits[i];
  }
  stats.loss /= static_cast<double>(samples.size());
  stats.accuracy /= static_cast<double>(samples.size());
  return stats;
}

std::vector<TrainSample> augment_swap(const std::vector<TrainSample>& batch) {
  std::vector<TrainSample> out;
  out.reserve(batch.size() * 2);
  for (const auto& s : batch) out.push_back(s);
  for (const auto& s : batch) {
    TrainSample swapped;
    swapped.eeg = s.eeg;
    swapped.env_a = s.env_b;
    swapped.env_b = s.env_a;
    swapped.label = 1 - s.label;
    out.push_back(std::move(swapped));
  }
  return out;
}

}  // namespace aad::net
