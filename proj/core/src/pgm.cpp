// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#include "egt/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "egt/error.hpp"

namespace egt {

std::uint8_t quantize_u8(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);  // round half up
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

void write_pgm(const std::string& path, std::int64_t height, std::int64_t width,
               const std::vector<double>& values) {
  if (static_cast<std::int64_t>(values.size()) != height * width) {
    throw ContractError("pgm: value count does not match dimensions");
  }
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
      std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::fprintf(f.get(), "P5\n%lld %lld\n255\n", static_cast<long long>(width),
               static_cast<long long>(height));
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width));
  for (std::int64_t y = 0; y < height; ++y) {
    for (std::int64_t x = 0; x < width; ++x) {
      row[static_cast<std::size_t>(x)] =
          quantize_u8(values[static_cast<std::size_t>(y * width + x)]);
    }
    if (std::fwrite(row.data(), 1, row.size(), f.get()) != row.size()) {
      throw IoError("short write to '" + path + "'");
    }
  }
}

}  // namespace egt
