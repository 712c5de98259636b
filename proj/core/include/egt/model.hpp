// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Five-block CNN with an attention module and a classification head at every
// block. Block i: conv3x3(s1,p1) -> BN -> ReLU -> maxpool2x2 (blocks 1-4) or
// adaptive average pool (block 5). At each block output F_i the exit computes
// A_i = sigmoid(conv1x1(F_i)), gates G_i = F_i * A_i, and classifies from the
// globally pooled gated features.

#ifndef EGT_MODEL_HPP_
#define EGT_MODEL_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "egt/nn_ops.hpp"
#include "egt/serialize.hpp"
#include "egt/tensor.hpp"

namespace egt {

struct ModelConfig {
  int image_size = 64;
  int num_classes = 9;
};

inline constexpr int kNumExits = 5;
inline constexpr std::array<std::int64_t, kNumExits> kBlockChannels = {
    64, 128, 256, 512, 512};
// Block 5 pools adaptively to at most 4x4 so the final attention map stays
// spatial even for small inputs.
inline constexpr std::int64_t kFinalPoolTarget = 4;

template <typename S>
struct ExitBundle {
  std::array<Tensor<S>, kNumExits> logits;     // each [N, classes]
  std::array<Tensor<S>, kNumExits> attention;  // each [N, 1, h_i, w_i]
};

template <typename S>
class Model {
 public:
  using Named = std::pair<std::string, Tensor<S>>;

  Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    if (config.num_classes < 2) {
      throw ConfigError("classes", "must be >= 2");
    }
    if (config.image_size < 32) {
      throw ConfigError("image",
                        "must be >= 32 so all five blocks keep spatial extent");
    }
    // Spatial plan: blocks 1-4 halve via maxpool, block 5 pools adaptively.
    std::int64_t s = config.image_size;
    for (int i = 0; i < 4; ++i) {
      spatial_[i] = s / 2;
      s = spatial_[i];
    }
    spatial_[4] = std::min<std::int64_t>(kFinalPoolTarget, s);

    std::uint64_t stream = 0;
    auto next_seed = [&] { return derive_seed(seed, stream++); };
    std::int64_t c_in = 3;
    for (int i = 0; i < kNumExits; ++i) {
      const std::int64_t c_out = kBlockChannels[i];
      auto& blk = blocks_[i];
      blk.conv.weight = Tensor<S>::kaiming_normal({c_out, c_in, 3, 3},
                                                  c_in * 9, next_seed());
      blk.conv.bias = Tensor<S>::zeros({c_out});
      blk.conv.stride = 1;
      blk.conv.padding = 1;
      blk.bn.gamma = Tensor<S>::full({c_out}, S(1));
      blk.bn.beta = Tensor<S>::zeros({c_out});
      blk.bn.running_mean = Tensor<S>::zeros({c_out});
      blk.bn.running_var = Tensor<S>::full({c_out}, S(1));
      auto& ex = exits_[i];
      ex.attn.weight =
          Tensor<S>::kaiming_normal({1, c_out, 1, 1}, c_out, next_seed());
      ex.attn.bias = Tensor<S>::zeros({1});
      ex.attn.stride = 1;
      ex.attn.padding = 0;
      ex.head_weight = Tensor<S>::kaiming_normal(
          {config.num_classes, c_out}, c_out, next_seed());
      ex.head_bias = Tensor<S>::zeros({config.num_classes});
      c_in = c_out;
    }
    for (auto& t : trainable()) t.set_requires_grad(true);
  }

  const ModelConfig& config() const { return config_; }

  // Spatial extent of F_i (and A_i), i in [0,5).
  std::int64_t exit_spatial(int i) const { return spatial_[i]; }

  // One backbone block. Input is the previous block's output (or the image).
  Tensor<S> block_forward(int i, const Tensor<S>& x, bool training) {
    auto& blk = blocks_[i];
    Tensor<S> y = conv2d(x, blk.conv);
    y = batchnorm2d(y, blk.bn, training);
    y = relu(y);
    if (i < 4) {
      y = maxpool2d(y, 2, 2);
    } else {
      y = adaptive_avgpool2d(y, spatial_[4], spatial_[4]);
    }
    return y;
  }

  // Attention map and logits for exit i given the block output F_i.
  std::pair<Tensor<S>, Tensor<S>> exit_forward(int i, const Tensor<S>& f) {
    auto& ex = exits_[i];
    Tensor<S> a = sigmoid(conv2d(f, ex.attn));
    Tensor<S> gated = attention_gate(f, a);
    Tensor<S> pooled = adaptive_avgpool2d(gated, 1, 1);
    Tensor<S> flat = reshape(pooled, {f.dim(0), f.dim(1)});
    Tensor<S> logits = linear(flat, ex.head_weight, ex.head_bias);
    return {std::move(logits), std::move(a)};
  }

  ExitBundle<S> forward(const Tensor<S>& x, bool training) {
    check_input(x);
    ExitBundle<S> bundle;
    Tensor<S> f = x;
    for (int i = 0; i < kNumExits; ++i) {
      f = block_forward(i, f, training);
      auto [logits, attn] = exit_forward(i, f);
      bundle.logits[i] = std::move(logits);
      bundle.attention[i] = std::move(attn);
    }
    return bundle;
  }

  struct PrefixResult {
    Tensor<S> logits;
    Tensor<S> attention;
    std::int64_t flops;  // per-sample multiply-accumulate proxy
  };

  // Runs blocks 1..exit_index only (eval semantics). exit_index in [1,5].
  PrefixResult forward_until(const Tensor<S>& x, int exit_index) {
    if (exit_index < 1 || exit_index > kNumExits) {
      throw ContractError("exit_index " + std::to_string(exit_index) +
                          " outside [1,5]");
    }
    check_input(x);
    PrefixResult r;
    Tensor<S> f = x;
    for (int i = 0; i < exit_index; ++i) f = block_forward(i, f, false);
    auto [logits, attn] = exit_forward(exit_index - 1, f);
    r.logits = std::move(logits);
    r.attention = std::move(attn);
    r.flops = flops_until(exit_index);
    return r;
  }

  // Deterministic per-sample MAC count for the prefix ending at exit_index:
  // all executed conv blocks plus the deciding exit's attention conv and head.
  std::int64_t flops_until(int exit_index) const {
    std::int64_t macs = 0;
    std::int64_t c_in = 3;
    std::int64_t s_in = config_.image_size;
    for (int i = 0; i < exit_index; ++i) {
      const std::int64_t c_out = kBlockChannels[i];
      macs += c_out * s_in * s_in * c_in * 9;  // conv3x3 at pre-pool extent
      c_in = c_out;
      s_in = spatial_[i];
    }
    const int e = exit_index - 1;
    const std::int64_t c = kBlockChannels[e];
    macs += spatial_[e] * spatial_[e] * c;  // 1x1 attention conv
    macs += static_cast<std::int64_t>(config_.num_classes) * c;  // head
    return macs;
  }

  // Census order is fixed; it defines the checkpoint layout.
  std::vector<Named> named_tensors() {
    std::vector<Named> out;
    out.reserve(50);
    for (int i = 0; i < kNumExits; ++i) {
      const std::string b = "block" + std::to_string(i + 1);
      out.emplace_back(b + ".conv.weight", blocks_[i].conv.weight);
      out.emplace_back(b + ".conv.bias", blocks_[i].conv.bias);
      out.emplace_back(b + ".bn.gamma", blocks_[i].bn.gamma);
      out.emplace_back(b + ".bn.beta", blocks_[i].bn.beta);
      out.emplace_back(b + ".bn.running_mean", blocks_[i].bn.running_mean);
      out.emplace_back(b + ".bn.running_var", blocks_[i].bn.running_var);
    }
    for (int i = 0; i < kNumExits; ++i) {
      const std::string e = "exit" + std::to_string(i + 1);
      out.emplace_back(e + ".attn.weight", exits_[i].attn.weight);
      out.emplace_back(e + ".attn.bias", exits_[i].attn.bias);
      out.emplace_back(e + ".head.weight", exits_[i].head_weight);
      out.emplace_back(e + ".head.bias", exits_[i].head_bias);
    }
    return out;
  }

  std::vector<Tensor<S>> trainable() {
    std::vector<Tensor<S>> out;
    for (auto& [name, t] : named_tensors()) {
      if (name.find("running_") == std::string::npos) out.push_back(t);
    }
    return out;
  }

  std::int64_t trainable_parameter_count() {
    std::int64_t n = 0;
    for (auto& t : trainable()) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& t : trainable()) t.zero_grad();
  }

  void save(const std::string& path) {
    std::vector<NamedTensorF32> tensors;
    for (auto& [name, t] : named_tensors()) {
      NamedTensorF32 nt;
      nt.name = name;
      for (auto d : t.shape()) nt.dims.push_back(static_cast<std::uint32_t>(d));
      nt.data.reserve(t.value().size());
      for (auto v : t.value()) nt.data.push_back(static_cast<float>(v));
      tensors.push_back(std::move(nt));
    }
    write_egtc(path, tensors);
  }

  void load(const std::string& path) {
    const auto tensors = read_egtc(path);
    auto named = named_tensors();
    if (tensors.size() != named.size()) {
      throw FormatError("checkpoint has " + std::to_string(tensors.size()) +
                            " tensors, model expects " +
                            std::to_string(named.size()),
                        0);
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
      const auto& src = tensors[i];
      auto& [name, dst] = named[i];
      if (src.name != name) {
        throw FormatError("checkpoint tensor '" + src.name +
                              "' where '" + name + "' was expected",
                          0);
      }
      if (src.data.size() != dst.value().size()) {
        throw FormatError("checkpoint tensor '" + src.name +
                              "' has wrong element count",
                          0);
      }
      auto& v = dst.mutable_value();
      for (std::size_t j = 0; j < v.size(); ++j)
        v[j] = static_cast<S>(src.data[j]);
    }
  }

 private:
  struct Block {
    Conv2dParams<S> conv;
    BatchNormParams<S> bn;
  };
  struct Exit {
    Conv2dParams<S> attn;
    Tensor<S> head_weight;
    Tensor<S> head_bias;
  };

  void check_input(const Tensor<S>& x) const {
    if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != config_.image_size ||
        x.dim(3) != config_.image_size) {
      throw ShapeError("model expects [N,3," +
                       std::to_string(config_.image_size) + "," +
                       std::to_string(config_.image_size) + "], got " +
                       shape_str(x.shape()));
    }
  }

  ModelConfig config_;
  std::array<Block, kNumExits> blocks_;
  std::array<Exit, kNumExits> exits_;
  std::array<std::int64_t, kNumExits> spatial_{};
};

// Builds a model whose geometry matches `config` and fills it from `path`.
template <typename S>
Model<S> model_from_checkpoint(const std::string& path,
                               const ModelConfig& config) {
  Model<S> model(config, /*seed=*/0);
  model.load(path);
  return model;
}

}  // namespace egt

#endif  // EGT_MODEL_HPP_
