// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: dataset synthesis, training, alpha sweeps,
// evaluation, latency benchmarking, and attention export. Reports go to
// files; progress goes to stderr. Exit codes: 0 success, 1 invalid input,
// 2 runtime failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "egt/config.hpp"
#include "egt/eval.hpp"
#include "egt/inference.hpp"
#include "egt/model.hpp"
#include "egt/serialize.hpp"
#include "egt/synthetic.hpp"
#include "egt/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string test_data_path;
  std::string ckpt_path;
  std::string out_ckpt;
  std::string metrics_path;
  std::string out_dir;
  std::string out_prefix;
  std::string alphas = "0,0.1,0.2,0.3,0.4,0.5";
  std::string ids;
  std::string difficulty = "mixed";
  std::string precision = "f64";
  std::string gen_out;
  int per_class = 152;
  int size = 64;
  std::uint64_t seed = 42;
  double tau = 0.9;
  int warmup = 10;
};

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    if (!item.empty()) {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) {
        throw egt::ConfigError("alphas", "bad number '" + item + "'");
      }
      out.push_back(v);
    }
    pos = comma + 1;
  }
  return out;
}

std::vector<std::int64_t> parse_id_list(const std::string& text) {
  std::vector<std::int64_t> out;
  for (double v : parse_double_list(text)) {
    out.push_back(static_cast<std::int64_t>(v));
  }
  return out;
}

egt::RunConfig load_config_or_default(const std::string& path) {
  if (path.empty()) {
    egt::RunConfig cfg;
    cfg.validate();
    return cfg;
  }
  return egt::load_config(path);
}

void require_geometry_match(const egt::RunConfig& cfg, const egt::Dataset& d) {
  if (d.height != cfg.image || d.width != cfg.image) {
    throw egt::ConfigError("image", "config image=" + std::to_string(cfg.image) +
                                        " but dataset is " +
                                        std::to_string(d.height) + "x" +
                                        std::to_string(d.width));
  }
  if (d.num_classes != cfg.classes) {
    throw egt::ConfigError("classes",
                           "config classes=" + std::to_string(cfg.classes) +
                               " but dataset has " +
                               std::to_string(d.num_classes));
  }
}

egt::ModelConfig model_config_for(const egt::Dataset& d) {
  egt::ModelConfig mc;
  mc.image_size = static_cast<int>(d.height);
  mc.num_classes = d.num_classes;
  return mc;
}

int run_gen_data(const CommonArgs& args) {
  const auto difficulty = egt::parse_difficulty(args.difficulty);
  std::cerr << "generating " << args.per_class << " samples/class at "
            << args.size << "x" << args.size << " (" << args.difficulty
            << ", seed " << args.seed << ")\n";
  auto data = egt::gen_synthetic(args.per_class, args.size, args.seed,
                                 difficulty);
  egt::write_egtd(args.gen_out, data);
  std::cerr << "wrote " << data.count() << " samples to " << args.gen_out
            << "\n";
  return 0;
}

template <typename S>
int run_train_t(const egt::RunConfig& cfg, const CommonArgs& args) {
  auto data = egt::read_egtd(args.data_path);
  data.split = "train";
  require_geometry_match(cfg, data);
  egt::Dataset test_data;
  const egt::Dataset* test_ptr = nullptr;
  if (!args.test_data_path.empty()) {
    test_data = egt::read_egtd(args.test_data_path);
    test_data.split = "eval";
    require_geometry_match(cfg, test_data);
    test_ptr = &test_data;
  }
  egt::Model<S> model(egt::ModelConfig{cfg.image, cfg.classes}, cfg.seed);
  auto tc = egt::TrainConfig::from_run_config(cfg);
  std::unique_ptr<egt::MetricsCsv> sink;
  if (!args.metrics_path.empty()) {
    sink = std::make_unique<egt::MetricsCsv>(args.metrics_path);
  }
  std::cerr << "training " << tc.epochs << " epochs on " << data.count()
            << " samples (alpha " << tc.alpha << ", "
            << egt::precision_name(cfg.precision) << ")\n";
  (void)egt::train_model(model, data, test_ptr, tc, args.out_ckpt, sink.get(),
                         &std::cerr);
  std::cerr << "checkpoint written to " << args.out_ckpt << "\n";
  return 0;
}

int run_train(const CommonArgs& args) {
  const auto cfg = load_config_or_default(args.config_path);
  return cfg.precision == egt::Precision::kF32 ? run_train_t<float>(cfg, args)
                                               : run_train_t<double>(cfg, args);
}

template <typename S>
int run_sweep_t(const egt::RunConfig& cfg, const CommonArgs& args) {
  auto train_data = egt::read_egtd(args.data_path);
  train_data.split = "train";
  require_geometry_match(cfg, train_data);
  egt::Dataset test_data;
  if (!args.test_data_path.empty()) {
    test_data = egt::read_egtd(args.test_data_path);
    require_geometry_match(cfg, test_data);
  } else {
    test_data = train_data;
  }
  test_data.split = "test";
  const auto alphas = parse_double_list(args.alphas);
  for (double a : alphas) {
    if (a < 0) throw egt::ConfigError("alphas", "alpha must be >= 0");
  }
  fs::create_directories(args.out_dir);
  auto report = egt::run_sweep<S>(cfg, train_data, test_data, alphas,
                                  args.out_dir, &std::cerr);
  egt::write_text_file(args.out_dir + "/report.txt",
                       egt::render_consistency_text(report));
  egt::write_text_file(args.out_dir + "/report.csv",
                       egt::render_consistency_csv(report));
  egt::write_text_file(args.out_dir + "/report.json",
                       egt::report_summary_json(&report, nullptr).dump(2) + "\n");
  std::cerr << "sweep reports written to " << args.out_dir << "\n";
  return 0;
}

int run_sweep(const CommonArgs& args) {
  const auto cfg = load_config_or_default(args.config_path);
  return cfg.precision == egt::Precision::kF32 ? run_sweep_t<float>(cfg, args)
                                               : run_sweep_t<double>(cfg, args);
}

template <typename S>
int run_eval_t(const CommonArgs& args) {
  auto data = egt::read_egtd(args.data_path);
  data.split = "test";
  auto model = egt::model_from_checkpoint<S>(args.ckpt_path,
                                             model_config_for(data));
  egt::ExitPolicy policy{args.tau, true};
  policy.validate();
  egt::ConsistencyReport report;
  report.tau = args.tau;
  egt::ConsistencyRow row;
  row.label = fs::path(args.ckpt_path).filename().string();
  const auto stats = egt::attention_consistency(model, data);
  row.exit_similarity = stats.exit_similarity;
  row.avg_similarity = stats.avg_similarity;
  row.overall_accuracy_pct =
      egt::policy_outcome_batched(model, data, policy).accuracy_pct();
  report.rows.push_back(row);
  egt::write_text_file(args.out_prefix + ".txt",
                       egt::render_consistency_text(report));
  egt::write_text_file(args.out_prefix + ".csv",
                       egt::render_consistency_csv(report));
  egt::write_text_file(args.out_prefix + ".json",
                       egt::report_summary_json(&report, nullptr).dump(2) + "\n");
  std::cerr << "eval report written to " << args.out_prefix << ".{txt,csv,json}\n";
  return 0;
}

template <typename S>
int run_bench_t(const CommonArgs& args) {
  auto data = egt::read_egtd(args.data_path);
  data.split = "test";
  auto model = egt::model_from_checkpoint<S>(args.ckpt_path,
                                             model_config_for(data));
  egt::ExitPolicy{args.tau, true}.validate();
  std::cerr << "benchmarking " << data.count()
            << " samples per arm (tau " << args.tau << ")\n";
  auto cmp = egt::compare_arms(model, data, args.tau, args.warmup);
  egt::EfficiencyReport report;
  report.time_with_ms = cmp.with_exits.mean_latency_us / 1000.0;
  report.time_without_ms = cmp.without_exits.mean_latency_us / 1000.0;
  report.speedup = report.time_without_ms / report.time_with_ms;
  report.median_speedup = cmp.median_speedup;
  report.acc_with_pct = 100.0 * cmp.with_exits.accuracy();
  report.acc_without_pct = 100.0 * cmp.without_exits.accuracy();
  report.early_exit_fraction = cmp.with_exits.early_exit_fraction();
  report.exit_counts = cmp.with_exits.exit_counts;
  report.samples = static_cast<std::int64_t>(cmp.with_exits.samples.size());
  report.tau = args.tau;

  egt::write_text_file(args.out_prefix + ".txt",
                       egt::render_efficiency_text(report));
  egt::write_text_file(args.out_prefix + ".csv",
                       egt::render_efficiency_csv(report));
  egt::write_text_file(args.out_prefix + ".json",
                       egt::report_summary_json(nullptr, &report).dump(2) + "\n");
  egt::write_trace_csv(cmp.with_exits, args.out_prefix + "_trace_with.csv");
  egt::write_trace_csv(cmp.without_exits,
                       args.out_prefix + "_trace_without.csv");
  std::cerr << "bench reports written to " << args.out_prefix
            << ".{txt,csv,json}\n";
  return 0;
}

template <typename S>
int run_export_t(const CommonArgs& args) {
  auto data = egt::read_egtd(args.data_path);
  auto model = egt::model_from_checkpoint<S>(args.ckpt_path,
                                             model_config_for(data));
  const auto ids = parse_id_list(args.ids);
  if (ids.empty()) throw egt::ConfigError("ids", "no sample ids given");
  fs::create_directories(args.out_dir);
  egt::export_attention(model, data, ids, args.out_dir);
  std::cerr << "attention maps for " << ids.size() << " samples written to "
            << args.out_dir << "\n";
  return 0;
}

int run_eval(const CommonArgs& args) {
  return args.precision == "f32" ? run_eval_t<float>(args)
                                 : run_eval_t<double>(args);
}

int run_bench(const CommonArgs& args) {
  return args.precision == "f32" ? run_bench_t<float>(args)
                                 : run_bench_t<double>(args);
}

int run_export(const CommonArgs& args) {
  return args.precision == "f32" ? run_export_t<float>(args)
                                 : run_export_t<double>(args);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explanation-guided training for early-exit CNNs"};
  app.require_subcommand(1);
  CommonArgs args;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--out", args.gen_out, "Output .egtd path")->required();
  gen->add_option("--per-class", args.per_class, "Samples per class");
  gen->add_option("--size", args.size, "Square image size");
  gen->add_option("--seed", args.seed, "Generator seed");
  gen->add_option("--difficulty", args.difficulty, "easy | mixed");

  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--config", args.config_path, "Config file (key = value)");
  train->add_option("--data", args.data_path, "Training .egtd")->required();
  train->add_option("--out-ckpt", args.out_ckpt, "Checkpoint output path")
      ->required();
  train->add_option("--metrics", args.metrics_path, "Metrics CSV path");
  train->add_option("--test-data", args.test_data_path,
                    "Optional eval split, adds eval rows to the metrics");

  auto* sweep = app.add_subcommand(
      "sweep", "Train the baseline plus an alpha grid and build the "
               "consistency report");
  sweep->add_option("--config", args.config_path, "Config file");
  sweep->add_option("--data", args.data_path, "Training .egtd")->required();
  sweep->add_option("--test-data", args.test_data_path,
                    "Held-out .egtd for the report (defaults to --data)");
  sweep->add_option("--alphas", args.alphas, "Comma list, e.g. 0,0.1,0.3");
  sweep->add_option("--out-dir", args.out_dir, "Report/checkpoint directory")
      ->required();

  auto* eval = app.add_subcommand("eval",
                                  "Consistency and accuracy for a checkpoint");
  eval->add_option("--ckpt", args.ckpt_path, "Checkpoint .egtc")->required();
  eval->add_option("--data", args.data_path, "Test .egtd")->required();
  eval->add_option("--tau", args.tau, "Confidence threshold");
  eval->add_option("--out", args.out_prefix, "Report path prefix")
      ->default_val("eval_report");
  eval->add_option("--precision", args.precision, "f32 | f64");

  auto* bench = app.add_subcommand(
      "bench", "Per-sample latency with and without early exits");
  bench->add_option("--ckpt", args.ckpt_path, "Checkpoint .egtc")->required();
  bench->add_option("--data", args.data_path, "Test .egtd")->required();
  bench->add_option("--tau", args.tau, "Confidence threshold");
  bench->add_option("--warmup", args.warmup, "Untimed warm-up samples");
  bench->add_option("--out", args.out_prefix, "Report path prefix")
      ->default_val("bench_report");
  bench->add_option("--precision", args.precision, "f32 | f64");

  auto* export_attn =
      app.add_subcommand("export-attn", "Write attention heatmaps");
  export_attn->add_option("--ckpt", args.ckpt_path, "Checkpoint .egtc")
      ->required();
  export_attn->add_option("--data", args.data_path, "Dataset .egtd")
      ->required();
  export_attn->add_option("--ids", args.ids, "Comma list of sample ids")
      ->required();
  export_attn->add_option("--out-dir", args.out_dir, "Output directory")
      ->required();
  export_attn->add_option("--precision", args.precision, "f32 | f64");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints usage/help
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_gen_data(args);
    if (train->parsed()) return run_train(args);
    if (sweep->parsed()) return run_sweep(args);
    if (eval->parsed()) return run_eval(args);
    if (bench->parsed()) return run_bench(args);
    if (export_attn->parsed()) return run_export(args);
    return 1;
  } catch (const egt::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const egt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
