// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Whole-model benchmarks: full forward, per-exit prefixes, the adaptive
// runtime against the always-full arm, and one optimizer step.

#include <benchmark/benchmark.h>

#include "egt/inference.hpp"
#include "egt/loss.hpp"
#include "egt/model.hpp"
#include "egt/optim.hpp"
#include "egt/synthetic.hpp"

namespace {

template <typename S>
void BM_forward_batch(benchmark::State& state) {
  egt::NoGradGuard ng;
  egt::ModelConfig mc;
  mc.image_size = static_cast<int>(state.range(1));
  egt::Model<S> model(mc, 1);
  auto x = egt::Tensor<S>::uniform(
      {state.range(0), 3, mc.image_size, mc.image_size}, S(0), S(1), 2);
  for (auto _ : state) {
    auto bundle = model.forward(x, false);
    benchmark::DoNotOptimize(bundle.logits[4].value().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <typename S>
void BM_forward_until(benchmark::State& state) {
  egt::NoGradGuard ng;
  egt::ModelConfig mc;
  mc.image_size = 32;
  egt::Model<S> model(mc, 1);
  auto x = egt::Tensor<S>::uniform({1, 3, 32, 32}, S(0), S(1), 2);
  const int exit_index = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = model.forward_until(x, exit_index);
    benchmark::DoNotOptimize(r.logits.value().data());
  }
}

template <typename S>
void BM_infer_sample(benchmark::State& state) {
  egt::ModelConfig mc;
  mc.image_size = 32;
  egt::Model<S> model(mc, 1);
  auto data = egt::gen_synthetic(1, 32, 5, egt::Difficulty::kEasy);
  auto [x, label] = egt::make_sample<S>(data, 0);
  // threshold 0 forces exit 1; threshold 1 with enabled=false runs the
  // full pipeline, bracketing the adaptive runtime.
  egt::ExitPolicy policy{state.range(0) == 0 ? 1e-9 : 0.9,
                         state.range(0) == 0};
  for (auto _ : state) {
    auto t = egt::infer_sample(model, x, label, policy);
    benchmark::DoNotOptimize(t.conf);
  }
}

template <typename S>
void BM_train_step(benchmark::State& state) {
  egt::ModelConfig mc;
  mc.image_size = 32;
  egt::Model<S> model(mc, 1);
  auto data = egt::gen_synthetic(4, 32, 5, egt::Difficulty::kMixed);
  std::vector<std::int64_t> idx(32);
  for (int i = 0; i < 32; ++i) idx[static_cast<std::size_t>(i)] = i % data.count();
  auto [x, labels] = egt::make_batch<S>(data, idx, 0, 32);
  egt::LossConfig lcfg;
  auto params = model.trainable();
  auto adam = egt::AdamState<S>::init(params);
  for (auto _ : state) {
    auto bundle = model.forward(x, true);
    auto bd = egt::total_loss(bundle, labels, lcfg);
    model.zero_grad();
    bd.total.backward();
    egt::adam_step(params, adam, 0.001);
    benchmark::DoNotOptimize(bd.l_total);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}

}  // namespace

BENCHMARK_TEMPLATE(BM_forward_batch, float)->Args({32, 32})->Args({32, 64});
BENCHMARK_TEMPLATE(BM_forward_batch, double)->Args({32, 32});
BENCHMARK_TEMPLATE(BM_forward_until, float)->DenseRange(1, 5);
BENCHMARK_TEMPLATE(BM_infer_sample, float)->Arg(0)->Arg(1);
BENCHMARK_TEMPLATE(BM_train_step, float);
BENCHMARK_TEMPLATE(BM_train_step, double);

BENCHMARK_MAIN();
