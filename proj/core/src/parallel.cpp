// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#include "egt/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace egt {
namespace {

thread_local bool tls_in_worker = false;

int env_thread_cap() {
  const char* env = std::getenv("EGT_THREADS");
  if (env != nullptr) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

struct ThreadPool::Impl {
  std::vector<std::thread> workers;
  std::queue<std::function<void()>> tasks;
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<int> active{1};
  int max_threads = 1;
  bool stop = false;

  void worker_loop() {
    tls_in_worker = true;
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return stop || !tasks.empty(); });
        if (stop && tasks.empty()) return;
        task = std::move(tasks.front());
        tasks.pop();
      }
      task();
    }
  }
};

ThreadPool::ThreadPool() : impl_(new Impl) {
  impl_->max_threads = env_thread_cap();
  impl_->active.store(impl_->max_threads);
  for (int i = 1; i < impl_->max_threads; ++i) {
    impl_->workers.emplace_back([this] { impl_->worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->stop = true;
  }
  impl_->cv.notify_all();
  for (auto& w : impl_->workers) w.join();
  delete impl_;
}

ThreadPool& ThreadPool::instance() {
  static ThreadPool pool;
  return pool;
}

int ThreadPool::active_threads() const { return impl_->active.load(); }

int ThreadPool::max_threads() const { return impl_->max_threads; }

void ThreadPool::set_active_threads(int n) {
  if (n < 1) n = 1;
  if (n > impl_->max_threads) n = impl_->max_threads;
  impl_->active.store(n);
}

void ThreadPool::parallel_for(
    std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int threads = tls_in_worker ? 1 : impl_->active.load();
  if (threads <= 1 || n == 1) {
    fn(0, n);
    return;
  }
  const int chunks = static_cast<int>(std::min<std::int64_t>(threads, n));
  std::atomic<int> remaining{chunks};
  std::mutex done_mu;
  std::condition_variable done_cv;

  const std::int64_t base = n / chunks;
  const std::int64_t rem = n % chunks;
  std::int64_t begin = 0;
  for (int c = 0; c < chunks; ++c) {
    const std::int64_t len = base + (c < rem ? 1 : 0);
    const std::int64_t b = begin;
    const std::int64_t e = begin + len;
    begin = e;
    auto task = [&, b, e] {
      fn(b, e);
      if (remaining.fetch_sub(1) == 1) {
        std::lock_guard<std::mutex> lock(done_mu);
        done_cv.notify_one();
      }
    };
    if (c == chunks - 1) {
      task();  // caller participates
    } else {
      std::lock_guard<std::mutex> lock(impl_->mu);
      impl_->tasks.push(std::move(task));
      impl_->cv.notify_one();
    }
  }
  std::unique_lock<std::mutex> lock(done_mu);
  done_cv.wait(lock, [&] { return remaining.load() == 0; });
}

}  // namespace egt
