// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#include "egt/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "egt/error.hpp"

namespace egt {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_number(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
  if (pos != value.size()) {
    throw ConfigError(key, "trailing characters in number '" + value + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_number(key, value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
  return i;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key, "expected true/false, got '" + value + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (!(lr0 > 0)) throw ConfigError("lr0", "must be > 0");
  if (step < 1) throw ConfigError("step", "must be >= 1");
  if (!(gamma > 0 && gamma <= 1)) throw ConfigError("gamma", "must be in (0,1]");
  if (batch < 1) throw ConfigError("batch", "must be >= 1");
  if (!(alpha >= 0)) throw ConfigError("alpha", "must be >= 0");
  if (!(eps > 0)) throw ConfigError("eps", "must be > 0");
  if (!(tau > 0 && tau <= 1)) throw ConfigError("tau", "must be in (0,1]");
  if (image < 32) throw ConfigError("image", "must be >= 32");
  if (classes < 2) throw ConfigError("classes", "must be >= 2");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "line " + std::to_string(line_no) +
                                  " is not of the form 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(key.empty() ? "(empty)" : key,
                        "line " + std::to_string(line_no) + " has no value");
    }

    if (key == "epochs") cfg.epochs = parse_int(key, value);
    else if (key == "lr0") cfg.lr0 = parse_number(key, value);
    else if (key == "step") cfg.step = parse_int(key, value);
    else if (key == "gamma") cfg.gamma = parse_number(key, value);
    else if (key == "batch") cfg.batch = parse_int(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_number(key, value));
    else if (key == "alpha") cfg.alpha = parse_number(key, value);
    else if (key == "detach_final_attention") cfg.detach_final_attention = parse_bool(key, value);
    else if (key == "eps") cfg.eps = parse_number(key, value);
    else if (key == "tau") cfg.tau = parse_number(key, value);
    else if (key == "exit_enabled") cfg.exit_enabled = parse_bool(key, value);
    else if (key == "image") cfg.image = parse_int(key, value);
    else if (key == "classes") cfg.classes = parse_int(key, value);
    else if (key == "precision") {
      if (value == "f32") cfg.precision = Precision::kF32;
      else if (value == "f64") cfg.precision = Precision::kF64;
      else throw ConfigError(key, "expected f32 or f64, got '" + value + "'");
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string precision_name(Precision p) {
  return p == Precision::kF32 ? "f32" : "f64";
}

}  // namespace egt
