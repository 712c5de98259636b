// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef EGT_SYNTHETIC_HPP_
#define EGT_SYNTHETIC_HPP_

#include <cstdint>
#include <string>

#include "egt/dataset.hpp"

namespace egt {

enum class Difficulty { kEasy, kMixed };

Difficulty parse_difficulty(const std::string& name);  // "easy" | "mixed"

// Procedurally drawn 9-class shape/color dataset. Class = shape (circle,
// square, triangle) x dominant color band (R, G, B). `easy` renders large
// high-contrast canonical instances. `mixed` draws a moderate majority
// (position/size/rotation jitter, high contrast) plus a hard tail with weak
// contrast, occlusion bars and gray distractors, so early exits stay useful
// while deep exits still earn their keep. The result is a pure function of
// (num_per_class, image_size, seed, difficulty).
Dataset gen_synthetic(int num_per_class, int image_size, std::uint64_t seed,
                      Difficulty difficulty);

}  // namespace egt

#endif  // EGT_SYNTHETIC_HPP_
