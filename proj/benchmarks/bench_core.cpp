// Microbenchmarks of the hot paths: LIF stepping, full forward passes of the
// desk model, a training step with BPTT, and MC-dropout inference.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "bcsnn/bayes.hpp"
#include "bcsnn/coding.hpp"
#include "bcsnn/data.hpp"
#include "bcsnn/model.hpp"
#include "bcsnn/network.hpp"
#include "bcsnn/neuron.hpp"
#include "bcsnn/rng.hpp"

namespace {

bcsnn::Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
  bcsnn::Tensor t(std::move(shape));
  bcsnn::Rng rng(seed);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(0.0, 1.0);
  return t;
}

void BM_LifStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bcsnn::LifParams params;
  bcsnn::LifState lif;
  lif.u_mem = bcsnn::Tensor({n});
  const bcsnn::Tensor input = random_tensor({n}, 11);

  for (auto _ : state) {
    auto [next, spikes] = bcsnn::lif_step(lif, input, params);
    benchmark::DoNotOptimize(spikes.data());
    lif = std::move(next);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LifStep)->Arg(1 << 10)->Arg(1 << 14)->Arg(1 << 18);

void BM_DeskForwardEval(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  bcsnn::Network net = bcsnn::build_model(bcsnn::desk_architecture());
  const bcsnn::Tensor input = random_tensor({batch, 3, 32, 32}, 12);
  bcsnn::ForwardOptions opts;
  opts.num_steps = 10;
  opts.mode = bcsnn::RunMode::kEval;

  for (auto _ : state) {
    bcsnn::TimeTape tape = net.forward(input, opts);
    benchmark::DoNotOptimize(tape.output_spikes.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DeskForwardEval)->Arg(1)->Arg(8);

void BM_DeskTrainStep(benchmark::State& state) {
  bcsnn::Network net = bcsnn::build_model(bcsnn::desk_architecture());
  const int batch = 8;
  const bcsnn::Tensor input = random_tensor({batch, 3, 32, 32}, 13);
  std::vector<int> labels(batch);
  for (int b = 0; b < batch; ++b) labels[b] = b % 2;

  bcsnn::ForwardOptions opts;
  opts.num_steps = 10;
  opts.mode = bcsnn::RunMode::kTrain;

  std::uint64_t pass = 0;
  for (auto _ : state) {
    opts.pass_seed = ++pass;
    bcsnn::TimeTape tape = net.forward(input, opts);
    std::vector<std::vector<double>> logit_grads;
    logit_grads.reserve(labels.size());
    for (std::size_t b = 0; b < labels.size(); ++b) {
      const auto record = bcsnn::spike_record_for_sample(tape, static_cast<int>(b));
      auto sl = bcsnn::softmax_cross_entropy(
          bcsnn::logits_for(record, bcsnn::CodingMode::kRate), labels[b]);
      for (auto& g : sl.loss_grad) g /= static_cast<double>(labels.size());
      logit_grads.push_back(std::move(sl.loss_grad));
    }
    net.zero_grad();
    bcsnn::bptt_backward(net, tape, bcsnn::CodingMode::kRate, logit_grads);
    benchmark::DoNotOptimize(net.all_params().front().grad->data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DeskTrainStep);

void BM_McPredict(benchmark::State& state) {
  const int passes = static_cast<int>(state.range(0));
  bcsnn::Network net = bcsnn::build_model(bcsnn::desk_architecture());
  const bcsnn::Tensor input = random_tensor({4, 3, 32, 32}, 14);

  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto summaries =
        bcsnn::mc_predict_batch(net, input, bcsnn::CodingMode::kRate, 10, passes, ++seed);
    benchmark::DoNotOptimize(summaries.front().mean.data());
  }
  state.SetItemsProcessed(state.iterations() * passes);
}
BENCHMARK(BM_McPredict)->Arg(5)->Arg(20);

void BM_Augment(benchmark::State& state) {
  const bcsnn::Dataset set = bcsnn::synthetic_dataset(2, 25, 32, 15);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const bcsnn::Dataset out = bcsnn::augment(set, 4, ++seed);
    benchmark::DoNotOptimize(out.samples.back().image.data());
  }
  state.SetItemsProcessed(state.iterations() * set.size() * 4);
}
BENCHMARK(BM_Augment);

}  // namespace

BENCHMARK_MAIN();
