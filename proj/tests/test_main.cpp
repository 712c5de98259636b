// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "egt/parallel.hpp"

int main(int argc, char** argv) {
  // Unit tests run with internal parallelism disabled so every numeric
  // expectation is exercised in the single-threaded configuration.
  egt::ThreadPool::instance().set_active_threads(1);
  doctest::Context context(argc, argv);
  return context.run();
}
