// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Epoch loop: seeded shuffle, minibatch forward, total loss, backward, Adam
// step with the step-decay schedule. Metrics stream to CSV; checkpoints use
// the EGTC container. A non-finite loss aborts with the first offending
// tensor named.

#ifndef EGT_TRAINER_HPP_
#define EGT_TRAINER_HPP_

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "egt/config.hpp"
#include "egt/dataset.hpp"
#include "egt/loss.hpp"
#include "egt/model.hpp"
#include "egt/optim.hpp"

namespace egt {

struct TrainConfig {
  int epochs = 50;
  double lr0 = 0.001;
  int step = 15;
  double gamma = 0.5;
  int batch = 32;
  std::uint64_t seed = 42;
  double alpha = 0.3;
  bool detach_final_attention = true;
  double eps = 1e-8;
  Precision precision = Precision::kF64;  // dispatch hint for callers
  int checkpoint_every = 0;               // 0: final checkpoint only
  bool classification_only = false;       // skip the consistency term entirely

  static TrainConfig from_run_config(const RunConfig& rc) {
    TrainConfig tc;
    tc.epochs = rc.epochs;
    tc.lr0 = rc.lr0;
    tc.step = rc.step;
    tc.gamma = rc.gamma;
    tc.batch = rc.batch;
    tc.seed = rc.seed;
    tc.alpha = rc.alpha;
    tc.detach_final_attention = rc.detach_final_attention;
    tc.eps = rc.eps;
    tc.precision = rc.precision;
    return tc;
  }
};

struct EpochStats {
  int epoch = 0;
  std::string split;
  double l_total = 0;
  double l_cls = 0;
  double l_cons = 0;
  std::array<double, kNumExits> accuracy{};
};

using History = std::vector<EpochStats>;

// CSV sink: epoch,split,l_total,l_cls,l_cons,acc_e1..acc_e5 (6 significant
// digits, accuracies as fractions).
class MetricsCsv {
 public:
  explicit MetricsCsv(const std::string& path) : out_(path) {
    if (!out_) throw IoError("cannot open metrics file '" + path + "'");
    out_ << "epoch,split,l_total,l_cls,l_cons,acc_e1,acc_e2,acc_e3,acc_e4,"
            "acc_e5\n";
  }

  void write(const EpochStats& s) {
    char buf[64];
    out_ << s.epoch << ',' << s.split;
    auto emit = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.6g", v);
      out_ << ',' << buf;
    };
    emit(s.l_total);
    emit(s.l_cls);
    emit(s.l_cons);
    for (double a : s.accuracy) emit(a);
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

namespace detail {

// Names the first non-finite tensor: parameters in census order, then the
// bundle's logits and attention maps, then the loss terms.
template <typename S>
[[noreturn]] void report_non_finite(Model<S>& model, const ExitBundle<S>& bundle,
                                    const LossBreakdown<S>& bd) {
  auto finite = [](const std::vector<S>& v) {
    for (auto x : v) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  };
  for (auto& [name, t] : model.named_tensors()) {
    if (!finite(t.value())) throw NumericError("non-finite values in " + name);
  }
  for (int i = 0; i < kNumExits; ++i) {
    if (!finite(bundle.logits[i].value())) {
      throw NumericError("non-finite values in exit" + std::to_string(i + 1) +
                         ".logits");
    }
    if (!finite(bundle.attention[i].value())) {
      throw NumericError("non-finite values in exit" + std::to_string(i + 1) +
                         ".attention");
    }
  }
  if (!std::isfinite(bd.l_cls)) throw NumericError("non-finite l_cls");
  if (!std::isfinite(bd.l_consistency)) {
    throw NumericError("non-finite l_consistency");
  }
  throw NumericError("non-finite l_total");
}

template <typename S>
void accumulate_exit_accuracy(const ExitBundle<S>& bundle,
                              const std::vector<int>& labels,
                              std::array<std::int64_t, kNumExits>& correct) {
  const std::int64_t n = bundle.logits[0].dim(0);
  const std::int64_t k = bundle.logits[0].dim(1);
  for (int e = 0; e < kNumExits; ++e) {
    const auto& v = bundle.logits[e].value();
    for (std::int64_t r = 0; r < n; ++r) {
      const S* row = v.data() + r * k;
      std::int64_t best = 0;
      for (std::int64_t j = 1; j < k; ++j) {
        if (row[j] > row[best]) best = j;
      }
      if (best == labels[static_cast<std::size_t>(r)]) {
        ++correct[static_cast<std::size_t>(e)];
      }
    }
  }
}

}  // namespace detail

// Eval-mode pass over a dataset: batch-weighted loss means and per-exit
// accuracy. Shared by the trainer's eval split and the reporting harness.
template <typename S>
EpochStats evaluate_split(Model<S>& model, const Dataset& data,
                          const TrainConfig& cfg, int epoch,
                          const std::string& split) {
  NoGradGuard ng;
  LossConfig lcfg{cfg.alpha, cfg.detach_final_attention, cfg.eps};
  const std::int64_t m = data.count();
  std::vector<std::int64_t> indices(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) indices[static_cast<std::size_t>(i)] = i;
  EpochStats stats;
  stats.epoch = epoch;
  stats.split = split;
  std::array<std::int64_t, kNumExits> correct{};
  double sum_total = 0, sum_cls = 0, sum_cons = 0;
  for (std::int64_t begin = 0; begin < m; begin += cfg.batch) {
    const std::int64_t end = std::min<std::int64_t>(begin + cfg.batch, m);
    auto [x, labels] = make_batch<S>(data, indices,
                                     static_cast<std::size_t>(begin),
                                     static_cast<std::size_t>(end));
    auto bundle = model.forward(x, /*training=*/false);
    auto bd = total_loss(bundle, labels, lcfg);
    const double b = static_cast<double>(end - begin);
    sum_total += bd.l_total * b;
    sum_cls += bd.l_cls * b;
    sum_cons += bd.l_consistency * b;
    detail::accumulate_exit_accuracy(bundle, labels, correct);
  }
  stats.l_total = sum_total / static_cast<double>(m);
  stats.l_cls = sum_cls / static_cast<double>(m);
  stats.l_cons = sum_cons / static_cast<double>(m);
  for (int e = 0; e < kNumExits; ++e) {
    stats.accuracy[static_cast<std::size_t>(e)] =
        static_cast<double>(correct[static_cast<std::size_t>(e)]) /
        static_cast<double>(m);
  }
  return stats;
}

template <typename S>
History train_model(Model<S>& model, const Dataset& train_data,
                    const Dataset* eval_data, const TrainConfig& cfg,
                    const std::string& checkpoint_path, MetricsCsv* sink,
                    std::ostream* progress = nullptr) {
  train_data.validate();
  if (train_data.num_classes != model.config().num_classes) {
    throw ConfigError("classes", "dataset has " +
                                     std::to_string(train_data.num_classes) +
                                     " classes, model expects " +
                                     std::to_string(model.config().num_classes));
  }
  LossConfig lcfg{cfg.alpha, cfg.detach_final_attention, cfg.eps};
  auto params = model.trainable();
  auto state = AdamState<S>::init(params);
  const std::int64_t m = train_data.count();
  std::vector<std::int64_t> indices(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) indices[static_cast<std::size_t>(i)] = i;

  History history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg.lr0, cfg.step, cfg.gamma);
    // Per-epoch stream so any epoch is reproducible in isolation.
    Rng shuffle_rng(derive_seed(cfg.seed, 0x100 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(indices);

    EpochStats stats;
    stats.epoch = epoch;
    stats.split = "train";
    std::array<std::int64_t, kNumExits> correct{};
    double sum_total = 0, sum_cls = 0, sum_cons = 0;

    for (std::int64_t begin = 0; begin < m; begin += cfg.batch) {
      const std::int64_t end = std::min<std::int64_t>(begin + cfg.batch, m);
      auto [x, labels] = make_batch<S>(train_data, indices,
                                       static_cast<std::size_t>(begin),
                                       static_cast<std::size_t>(end));
      auto bundle = model.forward(x, /*training=*/true);
      LossBreakdown<S> bd;
      if (cfg.classification_only) {
        bd.total = classification_loss(bundle, labels);
        bd.l_cls = bd.l_total = static_cast<double>(bd.total.item());
        bd.alpha = 0;
      } else {
        bd = total_loss(bundle, labels, lcfg);
      }
      if (!std::isfinite(bd.l_total)) {
        detail::report_non_finite(model, bundle, bd);
      }
      model.zero_grad();
      bd.total.backward();
      adam_step(params, state, lr);

      const double b = static_cast<double>(end - begin);
      sum_total += bd.l_total * b;
      sum_cls += bd.l_cls * b;
      sum_cons += bd.l_consistency * b;
      detail::accumulate_exit_accuracy(bundle, labels, correct);
    }

    stats.l_total = sum_total / static_cast<double>(m);
    stats.l_cls = sum_cls / static_cast<double>(m);
    stats.l_cons = sum_cons / static_cast<double>(m);
    for (int e = 0; e < kNumExits; ++e) {
      stats.accuracy[static_cast<std::size_t>(e)] =
          static_cast<double>(correct[static_cast<std::size_t>(e)]) /
          static_cast<double>(m);
    }
    history.push_back(stats);
    if (sink != nullptr) sink->write(stats);
    if (eval_data != nullptr) {
      auto ev = evaluate_split(model, *eval_data, cfg, epoch, "eval");
      history.push_back(ev);
      if (sink != nullptr) sink->write(ev);
    }
    if (progress != nullptr) {
      *progress << "epoch " << epoch << " lr " << lr << " l_total "
                << stats.l_total << " acc_e5 "
                << stats.accuracy[kNumExits - 1] << "\n";
      progress->flush();
    }
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
        !checkpoint_path.empty()) {
      model.save(checkpoint_path + ".ep" + std::to_string(epoch + 1));
    }
  }
  if (!checkpoint_path.empty()) model.save(checkpoint_path);
  return history;
}

}  // namespace egt

#endif  // EGT_TRAINER_HPP_
