// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference gradient checks for every differentiable op. The full
// 20-seed sweep lives in the acceptance suite; these runs keep a handful of
// seeds per op for quick iteration.

#include "doctest.h"
#include "egt/loss.hpp"
#include "egt/nn_ops.hpp"
#include "egt/tensor.hpp"
#include "oracles.hpp"

using egt::Tensor;

namespace {

constexpr double kTol = 1e-4;
constexpr int kSeeds = 5;

// Reduces an op output to a scalar via a fixed random weighting so every
// output coordinate influences the loss.
Tensor<double> weighted_sum(const Tensor<double>& t, std::uint64_t seed) {
  auto w = Tensor<double>::uniform(t.shape(), 0.5, 1.5, seed);
  return egt::sum_all(egt::mul(t, w));
}

}  // namespace

TEST_SUITE_BEGIN("gradcheck");

TEST_CASE("elementwise and reductions") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(100 + seed);
    auto a = Tensor<double>::from({3, 4}, oracles::smooth_values<double>(12, rng));
    auto b = Tensor<double>::from({3, 4}, oracles::smooth_values<double>(12, rng));
    std::vector<Tensor<double>> leaves{a, b};

    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::add(a, b), 7);
          }) < kTol);
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::sub(a, b), 8);
          }) < kTol);
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::mul(a, b), 9);
          }) < kTol);
    std::vector<Tensor<double>> single{a};
    CHECK(oracles::gradcheck_max_rel_err(single, [&] {
            return egt::mean_all(a);
          }) < kTol);
    CHECK(oracles::gradcheck_max_rel_err(single, [&] {
            return weighted_sum(egt::scale(a, 1.7), 10);
          }) < kTol);
  }
}

TEST_CASE("matmul") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(200 + seed);
    auto a = Tensor<double>::from({3, 5}, oracles::smooth_values<double>(15, rng));
    auto b = Tensor<double>::from({5, 2}, oracles::smooth_values<double>(10, rng));
    std::vector<Tensor<double>> leaves{a, b};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::matmul(a, b), 11);
          }) < kTol);
  }
}

TEST_CASE("relu and sigmoid") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(300 + seed);
    auto x = Tensor<double>::from({4, 4}, oracles::smooth_values<double>(16, rng));
    std::vector<Tensor<double>> leaves{x};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::relu(x), 12);
          }) < kTol);
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::sigmoid(x), 13);
          }) < kTol);
  }
}

TEST_CASE("softmax and cross_entropy") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(400 + seed);
    auto logits = Tensor<double>::from({3, 6}, oracles::smooth_values<double>(18, rng));
    std::vector<int> labels{1, 4, 0};
    std::vector<Tensor<double>> leaves{logits};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::softmax(logits), 14);
          }) < kTol);
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return egt::cross_entropy(logits, labels);
          }) < kTol);
  }
}

TEST_CASE("conv2d") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(500 + seed);
    egt::Conv2dParams<double> p;
    p.weight = Tensor<double>::from({3, 2, 3, 3}, oracles::smooth_values<double>(54, rng));
    p.bias = Tensor<double>::from({3}, oracles::smooth_values<double>(3, rng));
    p.stride = 1;
    p.padding = 1;
    auto x = Tensor<double>::from({1, 2, 5, 5}, oracles::smooth_values<double>(50, rng));
    std::vector<Tensor<double>> leaves{x, p.weight, p.bias};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::conv2d(x, p), 15);
          }) < kTol);
  }
}

TEST_CASE("batchnorm2d train and eval") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(600 + seed);
    egt::BatchNormParams<double> p;
    p.gamma = Tensor<double>::from({3}, oracles::smooth_values<double>(3, rng, true));
    p.beta = Tensor<double>::from({3}, oracles::smooth_values<double>(3, rng));
    p.running_mean = Tensor<double>::from({3}, oracles::smooth_values<double>(3, rng));
    p.running_var = Tensor<double>::from({3}, oracles::smooth_values<double>(3, rng, true));
    auto x = Tensor<double>::from({2, 3, 3, 3}, oracles::smooth_values<double>(54, rng));
    std::vector<Tensor<double>> leaves{x, p.gamma, p.beta};
    for (bool training : {true, false}) {
      CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
              return weighted_sum(egt::batchnorm2d(x, p, training), 16);
            }) < kTol);
    }
  }
}

TEST_CASE("maxpool2d and adaptive_avgpool2d") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(700 + seed);
    auto x = Tensor<double>::from({1, 2, 6, 6}, oracles::separated_values<double>(72, rng));
    std::vector<Tensor<double>> leaves{x};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::maxpool2d(x, 2, 2), 17);
          }) < kTol);
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::adaptive_avgpool2d(x, 2, 3), 18);
          }) < kTol);
  }
}

TEST_CASE("linear") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(800 + seed);
    auto x = Tensor<double>::from({3, 4}, oracles::smooth_values<double>(12, rng));
    auto w = Tensor<double>::from({2, 4}, oracles::smooth_values<double>(8, rng));
    auto b = Tensor<double>::from({2}, oracles::smooth_values<double>(2, rng));
    std::vector<Tensor<double>> leaves{x, w, b};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::linear(x, w, b), 19);
          }) < kTol);
  }
}

TEST_CASE("bilinear_resize up and down") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(900 + seed);
    auto x = Tensor<double>::from({1, 1, 4, 5}, oracles::smooth_values<double>(20, rng));
    std::vector<Tensor<double>> leaves{x};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::bilinear_resize(x, 7, 3), 20);
          }) < kTol);
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::bilinear_resize(x, 2, 2), 21);
          }) < kTol);
  }
}

TEST_CASE("cosine_distance") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(1000 + seed);
    auto x = Tensor<double>::from({6}, oracles::smooth_values<double>(6, rng));
    auto y = Tensor<double>::from({6}, oracles::smooth_values<double>(6, rng));
    std::vector<Tensor<double>> leaves{x, y};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return egt::cosine_distance(x, y, 1e-8);
          }) < kTol);
  }
}

TEST_CASE("attention_gate") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(1100 + seed);
    auto f = Tensor<double>::from({2, 3, 4, 4}, oracles::smooth_values<double>(96, rng));
    auto a = Tensor<double>::from({2, 1, 4, 4}, oracles::smooth_values<double>(32, rng, true));
    std::vector<Tensor<double>> leaves{f, a};
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return weighted_sum(egt::attention_gate(f, a), 22);
          }) < kTol);
  }
}

TEST_CASE("total loss over a synthetic bundle") {
  // Exercises cross-entropy + resize + cosine + the alpha combination
  // end-to-end on leaf logits and maps.
  for (int seed = 0; seed < kSeeds; ++seed) {
    egt::Rng rng(1200 + seed);
    egt::ExitBundle<double> bundle;
    const std::int64_t dims[5] = {8, 6, 4, 3, 2};
    std::vector<Tensor<double>> leaves;
    for (int e = 0; e < 5; ++e) {
      bundle.logits[e] =
          Tensor<double>::from({2, 9}, oracles::smooth_values<double>(18, rng));
      bundle.attention[e] = Tensor<double>::from(
          {2, 1, dims[e], dims[e]},
          oracles::smooth_values<double>(2 * dims[e] * dims[e], rng, true));
      leaves.push_back(bundle.logits[e]);
      leaves.push_back(bundle.attention[e]);
    }
    std::vector<int> labels{3, 7};
    egt::LossConfig cfg;
    cfg.alpha = 0.3;
    cfg.detach_final_attention = false;  // differentiate through A5 too
    CHECK(oracles::gradcheck_max_rel_err(leaves, [&] {
            return egt::total_loss(bundle, labels, cfg).total;
          }) < kTol);
  }
}

TEST_SUITE_END();
