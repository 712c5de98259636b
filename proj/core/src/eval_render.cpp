// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>

#include "egt/error.hpp"
#include "egt/eval.hpp"

namespace egt {
namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string render_consistency_text(const ConsistencyReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %7s %7s %7s %7s %7s %12s\n",
                "Model", "Exit 1", "Exit 2", "Exit 3", "Exit 4", "Avg",
                "Overall Acc.");
  out += line;
  out += std::string(73, '-') + "\n";
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line),
                  "%-22s %7.3f %7.3f %7.3f %7.3f %7.3f %11.2f%%\n",
                  r.label.c_str(), r.exit_similarity[0], r.exit_similarity[1],
                  r.exit_similarity[2], r.exit_similarity[3], r.avg_similarity,
                  r.overall_accuracy_pct);
    out += line;
  }
  return out;
}

std::string render_consistency_csv(const ConsistencyReport& report) {
  std::string out =
      "model,alpha,exit1,exit2,exit3,exit4,avg,overall_acc_pct\n";
  for (const auto& r : report.rows) {
    out += "\"" + r.label + "\"," + fmt("%g", r.alpha);
    for (double s : r.exit_similarity) out += "," + fmt("%.6f", s);
    out += "," + fmt("%.6f", r.avg_similarity);
    out += "," + fmt("%.4f", r.overall_accuracy_pct) + "\n";
  }
  return out;
}

std::string render_efficiency_text(const EfficiencyReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %22s %14s\n", "Model",
                "Avg Time/Sample (ms)", "Accuracy (%)");
  out += line;
  out += std::string(60, '-') + "\n";
  std::snprintf(line, sizeof(line), "%-22s %22.3f %14.2f\n", "With Early Exit",
                report.time_with_ms, report.acc_with_pct);
  out += line;
  std::snprintf(line, sizeof(line), "%-22s %22.3f %14.2f\n",
                "Without Early Exit", report.time_without_ms,
                report.acc_without_pct);
  out += line;
  std::snprintf(line, sizeof(line), "Speedup: %.2fx\n", report.speedup);
  out += line;
  return out;
}

std::string render_efficiency_csv(const EfficiencyReport& report) {
  std::string out = "model,avg_time_ms,accuracy_pct\n";
  out += "\"With Early Exit\"," + fmt("%.4f", report.time_with_ms) + "," +
         fmt("%.4f", report.acc_with_pct) + "\n";
  out += "\"Without Early Exit\"," + fmt("%.4f", report.time_without_ms) + "," +
         fmt("%.4f", report.acc_without_pct) + "\n";
  return out;
}

nlohmann::json consistency_json(const ConsistencyReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"label", r.label},
                    {"alpha", r.alpha},
                    {"exit_similarity", r.exit_similarity},
                    {"avg_similarity", r.avg_similarity},
                    {"overall_accuracy_pct", r.overall_accuracy_pct}});
  }
  return {{"tau", report.tau}, {"rows", rows}};
}

nlohmann::json efficiency_json(const EfficiencyReport& report) {
  return {{"time_with_ms", report.time_with_ms},
          {"time_without_ms", report.time_without_ms},
          {"speedup", report.speedup},
          {"median_speedup", report.median_speedup},
          {"acc_with", report.acc_with_pct},
          {"acc_without", report.acc_without_pct},
          {"early_exit_fraction", report.early_exit_fraction},
          {"exit_counts", report.exit_counts},
          {"samples", report.samples},
          {"tau", report.tau}};
}

nlohmann::json report_summary_json(const ConsistencyReport* consistency,
                                   const EfficiencyReport* efficiency) {
  nlohmann::json summary = nlohmann::json::object();
  if (consistency != nullptr) summary["consistency"] = consistency_json(*consistency);
  if (efficiency != nullptr) summary["efficiency"] = efficiency_json(*efficiency);
  return summary;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "'");
  out << content;
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace egt
