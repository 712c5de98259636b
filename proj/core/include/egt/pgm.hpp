// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef EGT_PGM_HPP_
#define EGT_PGM_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace egt {

// Binary PGM (P5, maxval 255). Values in [0,1] quantize as round(255*v),
// half rounding up; out-of-range values clamp.
void write_pgm(const std::string& path, std::int64_t height, std::int64_t width,
               const std::vector<double>& values);

std::uint8_t quantize_u8(double v);

}  // namespace egt

#endif  // EGT_PGM_HPP_
