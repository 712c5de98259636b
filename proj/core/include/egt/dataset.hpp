// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef EGT_DATASET_HPP_
#define EGT_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "egt/error.hpp"
#include "egt/tensor.hpp"

namespace egt {

// Labeled image set. Pixels are stored as f32 in [0,1] regardless of the
// compute precision; batches are converted on assembly.
struct Dataset {
  std::int64_t channels = 3;
  std::int64_t height = 0;
  std::int64_t width = 0;
  int num_classes = 9;
  std::vector<float> images;       // [count, C, H, W] row-major
  std::vector<std::int32_t> labels;
  std::string split;               // in-memory tag only, not serialized

  std::int64_t count() const {
    return static_cast<std::int64_t>(labels.size());
  }
  std::int64_t sample_size() const { return channels * height * width; }

  const float* sample(std::int64_t i) const {
    return images.data() + i * sample_size();
  }

  void validate() const {
    if (count() < 1) throw ContractError("dataset is empty");
    if (static_cast<std::int64_t>(images.size()) != count() * sample_size()) {
      throw ContractError("dataset image buffer size mismatch");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= num_classes) {
        throw LabelError("sample " + std::to_string(i) + " has label " +
                         std::to_string(labels[i]) + " outside [0," +
                         std::to_string(num_classes) + ")");
      }
    }
  }
};

// Assembles samples dataset[indices[begin..end)] into a [B,C,H,W] tensor and
// a label vector, converting pixels to the compute precision.
template <typename S>
std::pair<Tensor<S>, std::vector<int>> make_batch(
    const Dataset& data, const std::vector<std::int64_t>& indices,
    std::size_t begin, std::size_t end) {
  const std::int64_t b = static_cast<std::int64_t>(end - begin);
  const std::int64_t ss = data.sample_size();
  std::vector<S> pixels(static_cast<std::size_t>(b * ss));
  std::vector<int> labels(static_cast<std::size_t>(b));
  for (std::size_t i = begin; i < end; ++i) {
    const std::int64_t idx = indices[i];
    const float* src = data.sample(idx);
    S* dst = pixels.data() + static_cast<std::int64_t>(i - begin) * ss;
    for (std::int64_t j = 0; j < ss; ++j) dst[j] = static_cast<S>(src[j]);
    labels[i - begin] = data.labels[static_cast<std::size_t>(idx)];
  }
  return {Tensor<S>::from({b, data.channels, data.height, data.width},
                          std::move(pixels)),
          std::move(labels)};
}

// Single sample as a batch of one.
template <typename S>
std::pair<Tensor<S>, int> make_sample(const Dataset& data, std::int64_t i) {
  const std::int64_t ss = data.sample_size();
  std::vector<S> pixels(static_cast<std::size_t>(ss));
  const float* src = data.sample(i);
  for (std::int64_t j = 0; j < ss; ++j) pixels[static_cast<std::size_t>(j)] = static_cast<S>(src[j]);
  return {Tensor<S>::from({1, data.channels, data.height, data.width},
                          std::move(pixels)),
          data.labels[static_cast<std::size_t>(i)]};
}

}  // namespace egt

#endif  // EGT_DATASET_HPP_
