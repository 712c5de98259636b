// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bit-exact binary containers.
//
// Checkpoint (`EGTC`): magic, u32 LE version=1, u32 LE tensor count, then per
// tensor: u32 LE name length, UTF-8 name, u32 LE rank, rank x u32 LE dims,
// payload of little-endian f32.
//
// Dataset (`EGTD`): magic, u32 LE version=1, u32 LE count, u32 channels,
// u32 height, u32 width, u32 num_classes, then per sample: u32 LE label
// followed by C*H*W little-endian f32.

#ifndef EGT_SERIALIZE_HPP_
#define EGT_SERIALIZE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "egt/dataset.hpp"

namespace egt {

struct NamedTensorF32 {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

void write_egtc(const std::string& path,
                const std::vector<NamedTensorF32>& tensors);
std::vector<NamedTensorF32> read_egtc(const std::string& path);

void write_egtd(const std::string& path, const Dataset& dataset);
Dataset read_egtd(const std::string& path);

}  // namespace egt

#endif  // EGT_SERIALIZE_HPP_
