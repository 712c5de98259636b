// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Kernel micro-benchmarks. Shapes mirror what the five-block model actually
// issues at the default 64x64 input and the desk-scale 32x32 input.

#include <benchmark/benchmark.h>

#include "egt/gemm.hpp"
#include "egt/nn_ops.hpp"
#include "egt/parallel.hpp"
#include "egt/tensor.hpp"

namespace {

template <typename S>
void BM_gemm(benchmark::State& state) {
  const auto m = state.range(0), n = state.range(1), k = state.range(2);
  std::vector<S> a(static_cast<std::size_t>(m * k), S(1.1));
  std::vector<S> b(static_cast<std::size_t>(k * n), S(0.9));
  std::vector<S> c(static_cast<std::size_t>(m * n));
  for (auto _ : state) {
    egt::gemm_nn<S>(m, n, k, a.data(), b.data(), c.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * m * n * k);
}

template <typename S>
void BM_conv2d_forward(benchmark::State& state) {
  const auto c_in = state.range(0), c_out = state.range(1), hw = state.range(2);
  egt::NoGradGuard ng;
  auto x = egt::Tensor<S>::uniform({8, c_in, hw, hw}, S(-1), S(1), 1);
  egt::Conv2dParams<S> p;
  p.weight = egt::Tensor<S>::uniform({c_out, c_in, 3, 3}, S(-1), S(1), 2);
  p.bias = egt::Tensor<S>::zeros({c_out});
  p.padding = 1;
  for (auto _ : state) {
    auto y = egt::conv2d(x, p);
    benchmark::DoNotOptimize(y.value().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * c_out * hw * hw * c_in * 9);
}

template <typename S>
void BM_conv2d_train_step(benchmark::State& state) {
  const auto c_in = state.range(0), c_out = state.range(1), hw = state.range(2);
  auto x = egt::Tensor<S>::uniform({8, c_in, hw, hw}, S(-1), S(1), 1);
  egt::Conv2dParams<S> p;
  p.weight = egt::Tensor<S>::uniform({c_out, c_in, 3, 3}, S(-1), S(1), 2)
                 .set_requires_grad(true);
  p.bias = egt::Tensor<S>::zeros({c_out}).set_requires_grad(true);
  p.padding = 1;
  for (auto _ : state) {
    p.weight.zero_grad();
    p.bias.zero_grad();
    auto loss = egt::mean_all(egt::conv2d(x, p));
    loss.backward();
    benchmark::DoNotOptimize(p.weight.grad().data());
  }
}

template <typename S>
void BM_bilinear_resize(benchmark::State& state) {
  egt::NoGradGuard ng;
  auto a = egt::Tensor<S>::uniform({32, 1, state.range(0), state.range(0)},
                                   S(0), S(1), 3);
  for (auto _ : state) {
    auto y = egt::bilinear_resize(a, 4, 4);
    benchmark::DoNotOptimize(y.value().data());
  }
}

template <typename S>
void BM_batchnorm_train(benchmark::State& state) {
  const auto c = state.range(0), hw = state.range(1);
  egt::NoGradGuard ng;
  auto x = egt::Tensor<S>::uniform({8, c, hw, hw}, S(-1), S(1), 4);
  egt::BatchNormParams<S> p;
  p.gamma = egt::Tensor<S>::full({c}, S(1));
  p.beta = egt::Tensor<S>::zeros({c});
  p.running_mean = egt::Tensor<S>::zeros({c});
  p.running_var = egt::Tensor<S>::full({c}, S(1));
  for (auto _ : state) {
    auto y = egt::batchnorm2d(x, p, true);
    benchmark::DoNotOptimize(y.value().data());
  }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_gemm, float)->Args({128, 8192, 576})->Args({512, 2048, 2304});
BENCHMARK_TEMPLATE(BM_gemm, double)->Args({128, 8192, 576});
BENCHMARK_TEMPLATE(BM_conv2d_forward, float)->Args({64, 128, 16})->Args({256, 512, 8});
BENCHMARK_TEMPLATE(BM_conv2d_forward, double)->Args({64, 128, 16});
BENCHMARK_TEMPLATE(BM_conv2d_train_step, float)->Args({64, 128, 16});
BENCHMARK_TEMPLATE(BM_bilinear_resize, float)->Arg(32)->Arg(8);
BENCHMARK_TEMPLATE(BM_batchnorm_train, float)->Args({128, 16});

BENCHMARK_MAIN();
