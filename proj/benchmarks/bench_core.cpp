#include <benchmark/benchmark.h>

#include "aad/dsp/envelope.hpp"
#include "aad/dsp/filters.hpp"
#include "aad/eval/mesd.hpp"
#include "aad/linear/cca.hpp"
#include "aad/linear/ridge.hpp"
#include "aad/net/model.hpp"
#include "aad/rng.hpp"

namespace {

aad::nn::Tensor random_tensor(std::vector<std::int64_t> shape,
                              aad::RandomStream& rng) {
  aad::nn::Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.normal();
  return t;
}

void BM_Conv1d(benchmark::State& state) {
  aad::RandomStream rng(1);
  const auto t_len = state.range(0);
  const aad::nn::Tensor x = random_tensor({16, t_len}, rng);
  aad::nn::Conv1dParams p;
  p.weight = random_tensor({8, 16, 19}, rng);
  p.bias = random_tensor({8}, rng);
  for (auto _ : state) {
    auto y = aad::nn::conv1d(x, p);
    benchmark::DoNotOptimize(y.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 16 * 8 * 19 * t_len);
}
BENCHMARK(BM_Conv1d)->Arg(320)->Arg(640)->Arg(1280);

void BM_InceptionEeg(benchmark::State& state) {
  aad::RandomStream rng(2);
  aad::net::AadnetConfig cfg;
  cfg.n_eeg_channels = 16;
  aad::net::AadnetModel model(cfg);
  model.init_params(1);
  const Eigen::MatrixXd eeg = Eigen::MatrixXd::Random(16, state.range(0));
  const Eigen::VectorXd env = Eigen::VectorXd::Random(state.range(0));
  for (auto _ : state) {
    auto probs = model.forward_eval(eeg, env, env);
    benchmark::DoNotOptimize(probs.data());
  }
}
BENCHMARK(BM_InceptionEeg)->Arg(640)->Arg(1280);

void BM_RidgeFit(benchmark::State& state) {
  aad::RandomStream rng(3);
  const Eigen::Index rows = state.range(0);
  Eigen::MatrixXd x(rows, 272);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x.data()[i] = rng.normal();
  Eigen::VectorXd s(rows);
  for (Eigen::Index i = 0; i < rows; ++i) s[i] = rng.normal();
  for (auto _ : state) {
    auto d = aad::linear::ridge_fit(x, s, 1.0);
    benchmark::DoNotOptimize(d.g.data());
  }
}
BENCHMARK(BM_RidgeFit)->Arg(2000)->Arg(8000);

void BM_CcaFit(benchmark::State& state) {
  aad::RandomStream rng(4);
  const Eigen::Index rows = state.range(0);
  Eigen::MatrixXd x(rows, 136);
  Eigen::MatrixXd s(rows, 80);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
  for (auto _ : state) {
    auto m = aad::linear::cca_fit(x, s);
    benchmark::DoNotOptimize(m.correlations.data());
  }
}
BENCHMARK(BM_CcaFit)->Arg(4000)->Arg(16000);

void BM_GammatoneEnvelope(benchmark::State& state) {
  aad::RandomStream rng(5);
  const double rate = 8000.0;
  Eigen::VectorXd x(static_cast<Eigen::Index>(rate) * state.range(0));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  const aad::dsp::Signal audio = aad::dsp::single_channel(x, rate);
  const aad::dsp::GammatoneBankSpec spec;
  for (auto _ : state) {
    auto env = aad::dsp::gammatone_envelope(audio, spec, 64.0);
    benchmark::DoNotOptimize(env.data.data());
  }
}
BENCHMARK(BM_GammatoneEnvelope)->Arg(5)->Arg(20);

void BM_MesdClosedForm(benchmark::State& state) {
  std::vector<aad::eval::AccuracyPoint> points{
      {1, 0.55}, {2, 0.61}, {5, 0.68}, {10, 0.74}, {20, 0.81}, {40, 0.86}};
  const aad::eval::MesdConfig cfg;
  for (auto _ : state) {
    auto r = aad::eval::mesd(points, cfg);
    benchmark::DoNotOptimize(&r);
  }
}
BENCHMARK(BM_MesdClosedForm);

}  // namespace

BENCHMARK_MAIN();
