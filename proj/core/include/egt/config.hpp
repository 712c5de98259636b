// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat `key = value` run configuration ('#' starts a comment). Unknown keys
// and out-of-range values are rejected with the offending key named.

#ifndef EGT_CONFIG_HPP_
#define EGT_CONFIG_HPP_

#include <cstdint>
#include <string>

namespace egt {

enum class Precision { kF32, kF64 };

struct RunConfig {
  // Training schedule
  int epochs = 50;
  double lr0 = 0.001;
  int step = 15;       // epochs between learning-rate decays
  double gamma = 0.5;  // decay factor
  int batch = 32;
  std::uint64_t seed = 42;
  Precision precision = Precision::kF64;

  // Loss
  double alpha = 0.3;
  bool detach_final_attention = true;
  double eps = 1e-8;

  // Exit policy
  double tau = 0.9;
  bool exit_enabled = true;

  // Model / data geometry
  int image = 64;
  int classes = 9;

  void validate() const;
};

// Parses a config file; an empty file yields the defaults per `RunConfig`,
// a missing file is an io error. Later assignments to the same key win.
RunConfig load_config(const std::string& path);

// Parses config text (exposed for tests).
RunConfig parse_config(const std::string& text);

std::string precision_name(Precision p);

}  // namespace egt

#endif  // EGT_CONFIG_HPP_
