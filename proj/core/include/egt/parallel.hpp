// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal fork-join pool used by the compute kernels. Work is always split
// into contiguous index ranges in a fixed order, and kernels only ever write
// disjoint outputs with a fixed per-element reduction order, so results do
// not depend on the number of worker threads.
//
// The active thread count is capped by the EGT_THREADS environment variable
// and can be lowered at runtime (timing and reproducibility harnesses run
// with a single thread).

#ifndef EGT_PARALLEL_HPP_
#define EGT_PARALLEL_HPP_

#include <cstdint>
#include <functional>

namespace egt {

class ThreadPool {
 public:
  static ThreadPool& instance();

  // Runs fn(begin, end) over a partition of [0, n). Blocks until done.
  // Nested calls from inside a worker execute inline.
  void parallel_for(std::int64_t n,
                    const std::function<void(std::int64_t, std::int64_t)>& fn);

  int active_threads() const;
  void set_active_threads(int n);
  int max_threads() const;

  ~ThreadPool();

 private:
  ThreadPool();
  struct Impl;
  Impl* impl_;
};

// Convenience wrapper.
inline void parallel_for(
    std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  ThreadPool::instance().parallel_for(n, fn);
}

// RAII guard that pins the pool to a thread count for a scope.
class ThreadCountGuard {
 public:
  explicit ThreadCountGuard(int n)
      : prev_(ThreadPool::instance().active_threads()) {
    ThreadPool::instance().set_active_threads(n);
  }
  ~ThreadCountGuard() { ThreadPool::instance().set_active_threads(prev_); }
  ThreadCountGuard(const ThreadCountGuard&) = delete;
  ThreadCountGuard& operator=(const ThreadCountGuard&) = delete;

 private:
  int prev_;
};

}  // namespace egt

#endif  // EGT_PARALLEL_HPP_
