// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "egt/eval.hpp"
#include "egt/synthetic.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using egt::Tensor;

TEST_SUITE_BEGIN("eval");

TEST_CASE("consistency metric on a hand-built two-sample fixture") {
  // Maps small enough to fold by hand: identical dims, so the resize is the
  // identity and every cosine can be recomputed directly.
  egt::ExitBundle<double> bundle;
  std::vector<std::vector<double>> maps = {
      {0.9, 0.1, 0.1, 0.1, /* sample 2 */ 0.2, 0.8, 0.2, 0.8},
      {0.1, 0.9, 0.1, 0.1, /* sample 2 */ 0.8, 0.2, 0.8, 0.2},
      {0.5, 0.5, 0.5, 0.5, /* sample 2 */ 0.3, 0.3, 0.9, 0.9},
      {0.9, 0.9, 0.1, 0.1, /* sample 2 */ 0.6, 0.6, 0.6, 0.6},
      {0.7, 0.2, 0.2, 0.7, /* sample 2 */ 0.25, 0.55, 0.75, 0.95}};
  for (int e = 0; e < 5; ++e) {
    bundle.attention[e] = Tensor<double>::from({2, 1, 2, 2}, maps[static_cast<std::size_t>(e)]);
    bundle.logits[e] = Tensor<double>::zeros({2, 9});
  }
  egt::LossConfig cfg;
  auto [l, per_exit] = egt::consistency_loss(bundle, cfg);

  for (int e = 0; e < 4; ++e) {
    double expected = 0;
    for (int s = 0; s < 2; ++s) {
      std::vector<double> a(maps[static_cast<std::size_t>(e)].begin() + 4 * s,
                            maps[static_cast<std::size_t>(e)].begin() + 4 * (s + 1));
      std::vector<double> b(maps[4].begin() + 4 * s, maps[4].begin() + 4 * (s + 1));
      expected += oracles::cosine_distance_naive(a, b, 1e-8);
    }
    expected /= 2.0;
    CHECK(per_exit[static_cast<std::size_t>(e)] ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("metric/loss coherence on a real model") {
  auto data = egt::gen_synthetic(3, 32, 5, egt::Difficulty::kMixed);  // 27
  egt::ModelConfig mc;
  mc.image_size = 32;
  egt::Model<double> model(mc, 17);

  auto stats = egt::attention_consistency(model, data, 1e-8, 8);
  // 1 - avg similarity equals the distance-form consistency.
  CHECK(std::abs((1.0 - stats.avg_similarity) - stats.l_consistency) < 1e-9);

  // And both match the eval-mode loss value computed by the trainer path
  // (batch-weighted over the same batching).
  egt::TrainConfig tc;
  tc.alpha = 0.3;
  tc.batch = 8;
  tc.detach_final_attention = true;
  auto split = egt::evaluate_split(model, data, tc, 0, "eval");
  CHECK(std::abs(split.l_cons - stats.l_consistency) < 1e-9);
}

TEST_CASE("batched policy outcome matches the per-sample runtime") {
  auto data = egt::gen_synthetic(3, 32, 11, egt::Difficulty::kEasy);
  egt::ModelConfig mc;
  mc.image_size = 32;
  egt::Model<double> model(mc, 23);
  egt::ExitPolicy policy{0.3, true};
  auto outcome = egt::policy_outcome_batched(model, data, policy, 8);
  auto trace = egt::infer_dataset(model, data, policy, 0);
  CHECK(outcome.exit_counts == trace.exit_counts);
  CHECK(outcome.correct == trace.total_correct);
  CHECK(outcome.accuracy_pct() == doctest::Approx(100.0 * trace.accuracy()));
}

TEST_CASE("consistency_table: determinism across repeated checkpoints") {
  auto data = egt::gen_synthetic(2, 32, 13, egt::Difficulty::kMixed);
  egt::ModelConfig mc;
  mc.image_size = 32;
  egt::Model<double> model(mc, 29);
  model.save("test_table.egtc");
  std::vector<egt::LabeledCheckpoint> ckpts{
      {"baseline (alpha=0)", 0.0, "test_table.egtc"},
      {"again", 0.0, "test_table.egtc"}};
  egt::ExitPolicy policy{0.9, true};
  auto report = egt::consistency_table<double>(ckpts, data, policy);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].avg_similarity == report.rows[1].avg_similarity);
  CHECK(report.rows[0].exit_similarity == report.rows[1].exit_similarity);
  CHECK(report.rows[0].overall_accuracy_pct ==
        report.rows[1].overall_accuracy_pct);
  // Row average equals the mean of the four exit columns.
  const auto& r = report.rows[0];
  CHECK(std::abs(r.avg_similarity -
                 (r.exit_similarity[0] + r.exit_similarity[1] +
                  r.exit_similarity[2] + r.exit_similarity[3]) /
                     4.0) < 1e-9);
  for (double s : r.exit_similarity) {
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }

  const auto text = egt::render_consistency_text(report);
  CHECK(text.find("Exit 1") != std::string::npos);
  CHECK(text.find("Overall Acc.") != std::string::npos);
  const auto csv = egt::render_consistency_csv(report);
  CHECK(csv.find("model,alpha,exit1") == 0);
  std::remove("test_table.egtc");
}

TEST_CASE("efficiency report: identical arms stay near unit speedup") {
  auto data = egt::gen_synthetic(6, 32, 19, egt::Difficulty::kEasy);  // 54
  egt::ModelConfig mc;
  mc.image_size = 32;
  egt::Model<double> model(mc, 31);
  // Both arms disabled: timing-noise sanity band around 1.
  egt::ExitPolicy off{0.9, false};
  auto a = egt::infer_dataset(model, data, off, 5);
  auto b = egt::infer_dataset(model, data, off, 5);
  const double ratio = a.mean_latency_us / b.mean_latency_us;
  CHECK(ratio > 0.9);
  CHECK(ratio < 1.1);
}

TEST_CASE("efficiency report: json fields and table text") {
  egt::EfficiencyReport r;
  r.time_with_ms = 1.83;
  r.time_without_ms = 3.6;
  r.speedup = r.time_without_ms / r.time_with_ms;
  r.acc_with_pct = 97.8;
  r.acc_without_pct = 99.56;
  r.samples = 200;
  r.tau = 0.9;
  CHECK(r.speedup == doctest::Approx(1.967).epsilon(1e-3));

  auto j = egt::efficiency_json(r);
  CHECK(j.contains("time_with_ms"));
  CHECK(j.contains("time_without_ms"));
  CHECK(j.contains("speedup"));
  CHECK(j.contains("acc_with"));
  CHECK(j.contains("acc_without"));

  const auto text = egt::render_efficiency_text(r);
  CHECK(text.find("With Early Exit") != std::string::npos);
  CHECK(text.find("Without Early Exit") != std::string::npos);
  CHECK(text.find("1.83") != std::string::npos);

  auto summary = egt::report_summary_json(nullptr, &r);
  CHECK(summary.contains("efficiency"));
  CHECK_FALSE(summary.contains("consistency"));
}

TEST_CASE("pgm quantization rule") {
  CHECK(egt::quantize_u8(0.5) == 128);  // round half up
  CHECK(egt::quantize_u8(1.0) == 255);
  CHECK(egt::quantize_u8(0.0) == 0);
  CHECK(egt::quantize_u8(-0.2) == 0);
  CHECK(egt::quantize_u8(2.0) == 255);
  CHECK(egt::quantize_u8(127.4 / 255.0) == 127);

  std::vector<double> vals(6, 0.5);
  egt::write_pgm("test_map.pgm", 2, 3, vals);
  std::ifstream in("test_map.pgm", std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), {});
  CHECK(content.rfind("P5\n3 2\n255\n", 0) == 0);
  REQUIRE(content.size() == 11 + 6);
  for (std::size_t i = 11; i < content.size(); ++i) {
    CHECK(static_cast<unsigned char>(content[i]) == 128);
  }
  std::remove("test_map.pgm");
}

TEST_CASE("export_attention: files exist and the raw dump round-trips") {
  auto data = egt::gen_synthetic(1, 32, 23, egt::Difficulty::kEasy);
  egt::ModelConfig mc;
  mc.image_size = 32;
  egt::Model<double> model(mc, 41);
  fs::create_directories("test_attn_out");
  egt::export_attention(model, data, {0, 3}, "test_attn_out");

  auto bundle = model.forward(
      egt::make_sample<double>(data, 3).first, false);
  for (int e = 1; e <= 5; ++e) {
    const std::string base =
        "test_attn_out/sample0003_exit" + std::to_string(e);
    CHECK(fs::exists(base + ".pgm"));
    CHECK(fs::exists(base + ".egtc"));
    CHECK(fs::exists(base + "_aligned.pgm"));
    auto loaded = egt::read_egtc(base + ".egtc");
    REQUIRE(loaded.size() == 1);
    const auto& expected = bundle.attention[e - 1].value();
    REQUIRE(loaded[0].data.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(loaded[0].data[i] == static_cast<float>(expected[i]));
    }
  }
  CHECK_THROWS_AS(egt::export_attention(model, data, {99}, "test_attn_out"),
                  egt::ContractError);
  fs::remove_all("test_attn_out");
}

TEST_SUITE_END();
