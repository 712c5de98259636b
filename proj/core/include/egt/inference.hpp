// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Confidence-threshold early-exit runtime. A sample takes the first exit
// whose max-softmax confidence reaches the threshold; exit 5 always accepts.
// Features are computed once per block and shared across exits. Timed runs
// are strictly single-threaded with warm-up passes excluded.

#ifndef EGT_INFERENCE_HPP_
#define EGT_INFERENCE_HPP_

#include <array>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "egt/dataset.hpp"
#include "egt/model.hpp"
#include "egt/parallel.hpp"
#include "egt/tensor.hpp"

namespace egt {

struct ExitPolicy {
  double threshold = 0.9;
  bool enabled = true;  // disabled: always run to exit 5

  void validate() const {
    if (!(threshold > 0 && threshold <= 1)) {
      throw ConfigError("tau", "must be in (0,1]");
    }
  }
};

// First exit in 1..4 whose confidence is >= threshold, else 5. Pure function
// of the confidence prefix; `confidences` holds exits 1..4 (shorter lists
// mean the remaining exits were never evaluated).
inline int decide_exit(const std::vector<double>& confidences,
                       const ExitPolicy& policy) {
  if (policy.enabled) {
    const std::size_t early =
        std::min<std::size_t>(confidences.size(), kNumExits - 1);
    for (std::size_t i = 0; i < early; ++i) {
      if (confidences[i] >= policy.threshold) return static_cast<int>(i) + 1;
    }
  }
  return kNumExits;
}

// Max softmax probability of the first row of [N,K] logits.
template <typename S>
double confidence(const Tensor<S>& logits) {
  NoGradGuard ng;
  auto probs = softmax(logits);
  const std::int64_t k = probs.dim(1);
  const auto& v = probs.value();
  S best = v[0];
  for (std::int64_t j = 1; j < k; ++j) best = std::max(best, v[static_cast<std::size_t>(j)]);
  return static_cast<double>(best);
}

template <typename S>
int argmax_row(const Tensor<S>& logits, std::int64_t row = 0) {
  const std::int64_t k = logits.dim(1);
  const S* v = logits.value().data() + row * k;
  std::int64_t best = 0;
  for (std::int64_t j = 1; j < k; ++j) {
    if (v[j] > v[best]) best = j;
  }
  return static_cast<int>(best);
}

struct SampleTrace {
  std::int64_t sample_id = 0;
  int exit_index = 0;  // 1..5
  double conf = 0;
  int pred = 0;
  int label = 0;
  double latency_us = 0;
  std::int64_t flops = 0;
};

struct InferenceTrace {
  std::vector<SampleTrace> samples;
  std::array<std::int64_t, kNumExits> exit_counts{};
  std::array<std::int64_t, kNumExits> exit_correct{};
  std::int64_t total_correct = 0;
  double mean_latency_us = 0;
  double median_latency_us = 0;

  void finalize() {
    exit_counts.fill(0);
    exit_correct.fill(0);
    total_correct = 0;
    double sum = 0;
    std::vector<double> lat;
    lat.reserve(samples.size());
    for (const auto& s : samples) {
      const std::size_t e = static_cast<std::size_t>(s.exit_index - 1);
      ++exit_counts[e];
      const bool ok = s.pred == s.label;
      if (ok) {
        ++exit_correct[e];
        ++total_correct;
      }
      sum += s.latency_us;
      lat.push_back(s.latency_us);
    }
    mean_latency_us = samples.empty() ? 0 : sum / static_cast<double>(samples.size());
    std::sort(lat.begin(), lat.end());
    median_latency_us = lat.empty() ? 0 : lat[lat.size() / 2];
  }

  double accuracy() const {
    return samples.empty()
               ? 0
               : static_cast<double>(total_correct) /
                     static_cast<double>(samples.size());
  }

  double exit_accuracy(int e) const {
    const auto n = exit_counts[static_cast<std::size_t>(e)];
    return n == 0 ? 0
                  : static_cast<double>(exit_correct[static_cast<std::size_t>(e)]) /
                        static_cast<double>(n);
  }

  double early_exit_fraction() const {
    if (samples.empty()) return 0;
    std::int64_t early = 0;
    for (int e = 0; e < kNumExits - 1; ++e) early += exit_counts[static_cast<std::size_t>(e)];
    return static_cast<double>(early) / static_cast<double>(samples.size());
  }
};

// Runs one sample through the incremental pipeline. Latency covers every
// block and exit head executed up to the accepting decision.
template <typename S>
SampleTrace infer_sample(Model<S>& model, const Tensor<S>& x, int label,
                         const ExitPolicy& policy) {
  policy.validate();
  NoGradGuard ng;
  SampleTrace trace;
  trace.label = label;
  const auto t0 = std::chrono::steady_clock::now();
  Tensor<S> f = x;
  for (int i = 0; i < kNumExits; ++i) {
    f = model.block_forward(i, f, /*training=*/false);
    const bool last = i == kNumExits - 1;
    if (!policy.enabled && !last) continue;
    auto [logits, attn] = model.exit_forward(i, f);
    const double conf = confidence(logits);
    if (last || conf >= policy.threshold) {
      trace.exit_index = i + 1;
      trace.conf = conf;
      trace.pred = argmax_row(logits);
      break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  trace.latency_us =
      std::chrono::duration<double, std::micro>(t1 - t0).count();
  trace.flops = model.flops_until(trace.exit_index);
  return trace;
}

// Per-sample timed inference over a dataset. The first `warmup` samples are
// run once untimed; the timed loop is single-threaded.
template <typename S>
InferenceTrace infer_dataset(Model<S>& model, const Dataset& data,
                             const ExitPolicy& policy, int warmup = 10) {
  data.validate();
  policy.validate();
  ThreadCountGuard single(1);
  const std::int64_t m = data.count();
  const std::int64_t w = std::min<std::int64_t>(warmup, m);
  for (std::int64_t i = 0; i < w; ++i) {
    auto [x, label] = make_sample<S>(data, i);
    (void)infer_sample(model, x, label, policy);
  }
  InferenceTrace trace;
  trace.samples.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    auto [x, label] = make_sample<S>(data, i);
    auto s = infer_sample(model, x, label, policy);
    s.sample_id = i;
    trace.samples.push_back(s);
  }
  trace.finalize();
  return trace;
}

struct ArmComparison {
  InferenceTrace with_exits;
  InferenceTrace without_exits;
  double speedup = 0;         // mean(without) / mean(with)
  double median_speedup = 0;  // median(without) / median(with)
};

template <typename S>
ArmComparison compare_arms(Model<S>& model, const Dataset& data, double tau,
                           int warmup = 10) {
  ArmComparison cmp;
  ExitPolicy enabled{tau, true};
  ExitPolicy disabled{tau, false};
  cmp.with_exits = infer_dataset(model, data, enabled, warmup);
  cmp.without_exits = infer_dataset(model, data, disabled, warmup);
  cmp.speedup = cmp.without_exits.mean_latency_us / cmp.with_exits.mean_latency_us;
  cmp.median_speedup =
      cmp.without_exits.median_latency_us / cmp.with_exits.median_latency_us;
  return cmp;
}

// CSV: sample_id,exit,confidence,pred,label,latency_us
inline void write_trace_csv(const InferenceTrace& trace,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "'");
  out << "sample_id,exit,confidence,pred,label,latency_us\n";
  char buf[64];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof(buf), "%.6g", s.conf);
    out << s.sample_id << ',' << s.exit_index << ',' << buf << ',' << s.pred
        << ',' << s.label << ',';
    std::snprintf(buf, sizeof(buf), "%.3f", s.latency_us);
    out << buf << '\n';
  }
}

}  // namespace egt

#endif  // EGT_INFERENCE_HPP_
