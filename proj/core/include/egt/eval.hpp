// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation and reporting: the attention-consistency metric, the per-alpha
// consistency table, the with/without-early-exit efficiency table, and
// attention heatmap export. The consistency metric is the exact complement
// of the training-time consistency loss: both average the same per-sample
// cosine distances.

#ifndef EGT_EVAL_HPP_
#define EGT_EVAL_HPP_

#include <array>
#include <cstdio>
#include <fstream>
#include <atomic>
#include <mutex>
#include <ostream>
#include <thread>
#include <string>
#include <vector>

#include "json.hpp"

#include "egt/dataset.hpp"
#include "egt/inference.hpp"
#include "egt/loss.hpp"
#include "egt/model.hpp"
#include "egt/nn_ops.hpp"
#include "egt/pgm.hpp"
#include "egt/trainer.hpp"

namespace egt {

struct ConsistencyStats {
  std::array<double, 4> exit_similarity{};  // mean cosine similarity per exit
  double avg_similarity = 0;                // mean of the four exits
  double l_consistency = 0;                 // mean cosine distance (loss form)
};

// Full forward over the test set; per sample and early exit i, the cosine
// similarity between the resized map and the final map, averaged per exit.
template <typename S>
ConsistencyStats attention_consistency(Model<S>& model, const Dataset& data,
                                       double eps = 1e-8, int batch = 32) {
  data.validate();
  NoGradGuard ng;
  const std::int64_t m = data.count();
  std::vector<std::int64_t> indices(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) indices[static_cast<std::size_t>(i)] = i;
  std::array<double, 4> dcos_sum{};
  for (std::int64_t begin = 0; begin < m; begin += batch) {
    const std::int64_t end = std::min<std::int64_t>(begin + batch, m);
    auto [x, labels] = make_batch<S>(data, indices,
                                     static_cast<std::size_t>(begin),
                                     static_cast<std::size_t>(end));
    auto bundle = model.forward(x, /*training=*/false);
    const auto& a5 = bundle.attention[kNumExits - 1];
    const std::int64_t n = a5.dim(0), h5 = a5.dim(2), w5 = a5.dim(3);
    auto target_flat = reshape(a5, {n, h5 * w5});
    for (int e = 0; e < 4; ++e) {
      auto aligned = bilinear_resize(bundle.attention[e], h5, w5);
      auto rows = cosine_distance_rows(reshape(aligned, {n, h5 * w5}),
                                       target_flat, static_cast<S>(eps));
      for (auto d : rows.value()) {
        dcos_sum[static_cast<std::size_t>(e)] += static_cast<double>(d);
      }
    }
  }
  ConsistencyStats stats;
  double total = 0;
  for (int e = 0; e < 4; ++e) {
    const double mean_d = dcos_sum[static_cast<std::size_t>(e)] / static_cast<double>(m);
    stats.exit_similarity[static_cast<std::size_t>(e)] = 1.0 - mean_d;
    total += mean_d;
  }
  stats.l_consistency = total / 4.0;
  stats.avg_similarity = (stats.exit_similarity[0] + stats.exit_similarity[1] +
                          stats.exit_similarity[2] + stats.exit_similarity[3]) /
                         4.0;
  return stats;
}

// Early-exit policy outcome computed from batched forwards. The decision for
// each sample is identical to the per-sample runtime because prefix logits
// are bitwise equal; this path just avoids per-sample timing overhead.
struct PolicyOutcome {
  std::array<std::int64_t, kNumExits> exit_counts{};
  std::int64_t correct = 0;
  std::int64_t total = 0;

  double accuracy_pct() const {
    return total == 0 ? 0 : 100.0 * static_cast<double>(correct) /
                                static_cast<double>(total);
  }
};

template <typename S>
PolicyOutcome policy_outcome_batched(Model<S>& model, const Dataset& data,
                                     const ExitPolicy& policy, int batch = 32) {
  data.validate();
  policy.validate();
  NoGradGuard ng;
  const std::int64_t m = data.count();
  std::vector<std::int64_t> indices(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) indices[static_cast<std::size_t>(i)] = i;
  PolicyOutcome out;
  out.total = m;
  for (std::int64_t begin = 0; begin < m; begin += batch) {
    const std::int64_t end = std::min<std::int64_t>(begin + batch, m);
    auto [x, labels] = make_batch<S>(data, indices,
                                     static_cast<std::size_t>(begin),
                                     static_cast<std::size_t>(end));
    auto bundle = model.forward(x, /*training=*/false);
    const std::int64_t n = end - begin;
    const std::int64_t k = bundle.logits[0].dim(1);
    for (std::int64_t r = 0; r < n; ++r) {
      int chosen = kNumExits;
      for (int e = 0; e < kNumExits - 1 && policy.enabled; ++e) {
        // Max softmax probability of this row; exp(0) at the max entry makes
        // it 1/denom, bitwise equal to the per-sample runtime's confidence.
        const S* row = bundle.logits[e].value().data() + r * k;
        S mx = row[0];
        for (std::int64_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        S denom = S(0);
        for (std::int64_t j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
        const double conf = static_cast<double>(S(1) / denom);
        if (conf >= policy.threshold) {
          chosen = e + 1;
          break;
        }
      }
      const int e = chosen - 1;
      ++out.exit_counts[static_cast<std::size_t>(e)];
      const S* row = bundle.logits[e].value().data() + r * k;
      std::int64_t best = 0;
      for (std::int64_t j = 1; j < k; ++j) {
        if (row[j] > row[best]) best = j;
      }
      if (best == labels[static_cast<std::size_t>(r)]) ++out.correct;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consistency table (one row per checkpoint)

struct ConsistencyRow {
  std::string label;
  double alpha = 0;
  std::array<double, 4> exit_similarity{};
  double avg_similarity = 0;
  double overall_accuracy_pct = 0;  // under the early-exit policy
};

struct ConsistencyReport {
  std::vector<ConsistencyRow> rows;
  double tau = 0.9;
};

struct LabeledCheckpoint {
  std::string label;
  double alpha = 0;
  std::string path;
};

template <typename S>
ConsistencyReport consistency_table(const std::vector<LabeledCheckpoint>& ckpts,
                                    const Dataset& data,
                                    const ExitPolicy& policy, double eps = 1e-8,
                                    int batch = 32) {
  ConsistencyReport report;
  report.tau = policy.threshold;
  ModelConfig mc;
  mc.image_size = static_cast<int>(data.height);
  mc.num_classes = data.num_classes;
  for (const auto& ck : ckpts) {
    auto model = model_from_checkpoint<S>(ck.path, mc);
    ConsistencyRow row;
    row.label = ck.label;
    row.alpha = ck.alpha;
    const auto stats = attention_consistency(model, data, eps, batch);
    row.exit_similarity = stats.exit_similarity;
    row.avg_similarity = stats.avg_similarity;
    row.overall_accuracy_pct =
        policy_outcome_batched(model, data, policy, batch).accuracy_pct();
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Efficiency table

struct EfficiencyReport {
  double time_with_ms = 0;
  double time_without_ms = 0;
  double speedup = 0;  // without / with
  double acc_with_pct = 0;
  double acc_without_pct = 0;
  double median_speedup = 0;
  double early_exit_fraction = 0;
  std::array<std::int64_t, kNumExits> exit_counts{};
  std::int64_t samples = 0;
  double tau = 0.9;
};

template <typename S>
EfficiencyReport efficiency_table(Model<S>& model, const Dataset& data,
                                  double tau, int warmup = 10) {
  auto cmp = compare_arms(model, data, tau, warmup);
  EfficiencyReport r;
  r.time_with_ms = cmp.with_exits.mean_latency_us / 1000.0;
  r.time_without_ms = cmp.without_exits.mean_latency_us / 1000.0;
  r.speedup = r.time_without_ms / r.time_with_ms;
  r.median_speedup = cmp.median_speedup;
  r.acc_with_pct = 100.0 * cmp.with_exits.accuracy();
  r.acc_without_pct = 100.0 * cmp.without_exits.accuracy();
  r.early_exit_fraction = cmp.with_exits.early_exit_fraction();
  r.exit_counts = cmp.with_exits.exit_counts;
  r.samples = static_cast<std::int64_t>(cmp.with_exits.samples.size());
  r.tau = tau;
  return r;
}

// ---------------------------------------------------------------------------
// Renderers. Similarities print with 3 decimals, percentages with 2.

std::string render_consistency_text(const ConsistencyReport& report);
std::string render_consistency_csv(const ConsistencyReport& report);
std::string render_efficiency_text(const EfficiencyReport& report);
std::string render_efficiency_csv(const EfficiencyReport& report);

nlohmann::json consistency_json(const ConsistencyReport& report);
nlohmann::json efficiency_json(const EfficiencyReport& report);

// Machine-readable summary combining whichever tables were produced.
nlohmann::json report_summary_json(const ConsistencyReport* consistency,
                                   const EfficiencyReport* efficiency);

void write_text_file(const std::string& path, const std::string& content);

// ---------------------------------------------------------------------------
// Attention export: per sample and exit, the raw map in an EGTC container,
// an 8-bit PGM heatmap, and the map resized to the final exit's extent.

template <typename S>
void export_attention(Model<S>& model, const Dataset& data,
                      const std::vector<std::int64_t>& ids,
                      const std::string& out_dir) {
  NoGradGuard ng;
  for (auto id : ids) {
    if (id < 0 || id >= data.count()) {
      throw ContractError("sample id " + std::to_string(id) +
                          " outside dataset of " + std::to_string(data.count()));
    }
    auto [x, label] = make_sample<S>(data, id);
    auto bundle = model.forward(x, /*training=*/false);
    const auto& a5 = bundle.attention[kNumExits - 1];
    const std::int64_t h5 = a5.dim(2), w5 = a5.dim(3);
    char prefix[64];
    std::snprintf(prefix, sizeof(prefix), "sample%04lld",
                  static_cast<long long>(id));
    for (int e = 0; e < kNumExits; ++e) {
      const auto& a = bundle.attention[e];
      const std::int64_t h = a.dim(2), w = a.dim(3);
      const std::string base =
          out_dir + "/" + prefix + "_exit" + std::to_string(e + 1);

      NamedTensorF32 raw;
      raw.name = std::string(prefix) + ".exit" + std::to_string(e + 1) +
                 ".attention";
      raw.dims = {1, 1, static_cast<std::uint32_t>(h),
                  static_cast<std::uint32_t>(w)};
      for (auto v : a.value()) raw.data.push_back(static_cast<float>(v));
      write_egtc(base + ".egtc", {raw});

      std::vector<double> vals(a.value().begin(), a.value().end());
      write_pgm(base + ".pgm", h, w, vals);

      auto aligned = bilinear_resize(a, h5, w5);
      std::vector<double> avals(aligned.value().begin(), aligned.value().end());
      write_pgm(base + "_aligned.pgm", h5, w5, avals);
    }
  }
}

// ---------------------------------------------------------------------------
// Sweep: trains the baseline and each alpha with the same seed and dataset,
// then assembles the consistency table on the test split. Runs are
// independent, so they may train concurrently; each run stays internally
// deterministic regardless of how the runs are scheduled.

template <typename S>
ConsistencyReport run_sweep(const RunConfig& base, const Dataset& train_data,
                            const Dataset& test_data,
                            std::vector<double> alphas,
                            const std::string& out_dir,
                            std::ostream* progress = nullptr,
                            int parallel_runs = 0 /* 0: one per core */) {
  // Baseline first, then ascending alphas, without duplicates.
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  if (alphas.empty() || alphas.front() != 0.0) {
    alphas.insert(alphas.begin(), 0.0);
  }

  ModelConfig mc;
  mc.image_size = base.image;
  mc.num_classes = base.classes;
  const int n_runs = static_cast<int>(alphas.size());
  int workers = parallel_runs > 0 ? parallel_runs
                                  : ThreadPool::instance().max_threads();
  workers = std::min(workers, n_runs);

  std::vector<LabeledCheckpoint> ckpts(static_cast<std::size_t>(n_runs));
  std::atomic<int> next{0};
  std::mutex log_mu;
  std::exception_ptr first_error;

  auto run_one = [&](int idx) {
    const double alpha = alphas[static_cast<std::size_t>(idx)];
    char tag[32];
    std::snprintf(tag, sizeof(tag), "alpha_%.2f", alpha);
    const std::string ckpt_path = out_dir + "/egt_" + tag + ".egtc";
    if (progress != nullptr) {
      std::lock_guard<std::mutex> lock(log_mu);
      *progress << "sweep: training " << tag << " (" << base.epochs
                << " epochs)\n";
      progress->flush();
    }
    TrainConfig tc = TrainConfig::from_run_config(base);
    tc.alpha = alpha;
    Model<S> model(mc, base.seed);
    MetricsCsv sink(out_dir + "/metrics_" + std::string(tag) + ".csv");
    train_model(model, train_data, static_cast<const Dataset*>(nullptr), tc,
                ckpt_path, &sink,
                workers == 1 ? progress : nullptr);
    char label[48];
    if (alpha == 0.0) {
      std::snprintf(label, sizeof(label), "baseline (alpha=0)");
    } else {
      std::snprintf(label, sizeof(label), "EGT (alpha=%g)", alpha);
    }
    ckpts[static_cast<std::size_t>(idx)] = {label, alpha, ckpt_path};
    if (progress != nullptr) {
      std::lock_guard<std::mutex> lock(log_mu);
      *progress << "sweep: finished " << tag << "\n";
      progress->flush();
    }
  };

  auto worker_fn = [&] {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= n_runs) return;
      try {
        run_one(idx);
      } catch (...) {
        std::lock_guard<std::mutex> lock(log_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers <= 1) {
    worker_fn();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker_fn);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExitPolicy policy{base.tau, base.exit_enabled};
  return consistency_table<S>(ckpts, test_data, policy, base.eps, base.batch);
}

}  // namespace egt

#endif  // EGT_EVAL_HPP_
