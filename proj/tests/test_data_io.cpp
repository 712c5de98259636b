// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "egt/config.hpp"
#include "egt/serialize.hpp"
#include "egt/synthetic.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

void truncate_file(const std::string& path, std::uintmax_t size) {
  fs::resize_file(path, size);
}

}  // namespace

TEST_SUITE_BEGIN("data_io");

TEST_CASE("gen_synthetic: determinism, histogram, value range") {
  auto a = egt::gen_synthetic(5, 32, 42, egt::Difficulty::kMixed);
  auto b = egt::gen_synthetic(5, 32, 42, egt::Difficulty::kMixed);
  CHECK(a.images == b.images);  // bitwise
  CHECK(a.labels == b.labels);

  auto c = egt::gen_synthetic(5, 32, 43, egt::Difficulty::kMixed);
  CHECK(a.images != c.images);

  std::array<int, 9> histogram{};
  for (auto label : a.labels) ++histogram[static_cast<std::size_t>(label)];
  for (int count : histogram) CHECK(count == 5);

  for (float v : a.images) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  // Paper-scale split: 152 per class across 9 classes.
  auto big = egt::gen_synthetic(152, 32, 1, egt::Difficulty::kEasy);
  CHECK(big.count() == 1368);
}

TEST_CASE("gen_synthetic: easy and mixed are distinct renderings") {
  auto easy = egt::gen_synthetic(2, 32, 7, egt::Difficulty::kEasy);
  auto mixed = egt::gen_synthetic(2, 32, 7, egt::Difficulty::kMixed);
  CHECK(easy.images != mixed.images);
  CHECK(egt::parse_difficulty("easy") == egt::Difficulty::kEasy);
  CHECK(egt::parse_difficulty("mixed") == egt::Difficulty::kMixed);
  CHECK_THROWS_AS(egt::parse_difficulty("hard"), egt::ConfigError);
}

TEST_CASE("egtd: round trip is the identity (property over random sets)") {
  for (int trial = 0; trial < 5; ++trial) {
    egt::Rng rng(200 + trial);
    egt::Dataset d;
    d.channels = 1 + static_cast<std::int64_t>(rng.uniform_index(3));
    d.height = 2 + static_cast<std::int64_t>(rng.uniform_index(5));
    d.width = 2 + static_cast<std::int64_t>(rng.uniform_index(5));
    d.num_classes = 2 + static_cast<int>(rng.uniform_index(8));
    const std::int64_t count = 1 + static_cast<std::int64_t>(rng.uniform_index(6));
    d.images.resize(static_cast<std::size_t>(count * d.sample_size()));
    for (auto& v : d.images) v = static_cast<float>(rng.uniform());
    for (std::int64_t i = 0; i < count; ++i) {
      d.labels.push_back(static_cast<std::int32_t>(
          rng.uniform_index(static_cast<std::uint64_t>(d.num_classes))));
    }
    egt::write_egtd("test_roundtrip.egtd", d);
    auto loaded = egt::read_egtd("test_roundtrip.egtd");
    CHECK(loaded.channels == d.channels);
    CHECK(loaded.height == d.height);
    CHECK(loaded.width == d.width);
    CHECK(loaded.num_classes == d.num_classes);
    CHECK(loaded.images == d.images);  // bitwise
    CHECK(loaded.labels == d.labels);
  }
  std::remove("test_roundtrip.egtd");
}

TEST_CASE("egtd: malformed files") {
  auto d = egt::gen_synthetic(1, 32, 3, egt::Difficulty::kEasy);
  egt::write_egtd("test_bad.egtd", d);
  const auto full_size = fs::file_size("test_bad.egtd");

  SUBCASE("truncated mid-sample reports the byte offset") {
    truncate_file("test_bad.egtd", full_size - 100);
    try {
      (void)egt::read_egtd("test_bad.egtd");
      FAIL("expected FormatError");
    } catch (const egt::FormatError& e) {
      CHECK(e.offset() > 0);
      CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
  }

  SUBCASE("empty file is missing its magic") {
    truncate_file("test_bad.egtd", 0);
    try {
      (void)egt::read_egtd("test_bad.egtd");
      FAIL("expected FormatError");
    } catch (const egt::FormatError& e) {
      CHECK(std::string(e.what()).find("missing magic") != std::string::npos);
    }
  }

  SUBCASE("bad magic") {
    std::ofstream out("test_bad.egtd", std::ios::binary);
    out << "NOPE" << std::string(64, '\0');
    out.close();
    CHECK_THROWS_AS((void)egt::read_egtd("test_bad.egtd"), egt::FormatError);
  }

  SUBCASE("label outside num_classes names the offset") {
    // Patch the first label (offset 28) to 200.
    std::fstream f("test_bad.egtd",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(28);
    const unsigned char bad[4] = {200, 0, 0, 0};
    f.write(reinterpret_cast<const char*>(bad), 4);
    f.close();
    try {
      (void)egt::read_egtd("test_bad.egtd");
      FAIL("expected FormatError");
    } catch (const egt::FormatError& e) {
      CHECK(e.offset() == 28);
    }
  }

  std::remove("test_bad.egtd");
}

TEST_CASE("egtc: round trip and corruption") {
  std::vector<egt::NamedTensorF32> tensors;
  egt::NamedTensorF32 t1;
  t1.name = "layer.weight";
  t1.dims = {2, 3};
  t1.data = {1.5f, -2.25f, 0.0f, 3.0f, -0.125f, 7.0f};
  egt::NamedTensorF32 t2;
  t2.name = "layer.bias";
  t2.dims = {2};
  t2.data = {0.5f, -0.5f};
  tensors.push_back(t1);
  tensors.push_back(t2);
  egt::write_egtc("test_ck.egtc", tensors);

  auto loaded = egt::read_egtc("test_ck.egtc");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "layer.weight");
  CHECK(loaded[0].dims == t1.dims);
  CHECK(loaded[0].data == t1.data);  // bitwise
  CHECK(loaded[1].name == "layer.bias");
  CHECK(loaded[1].data == t2.data);

  SUBCASE("truncated payload") {
    truncate_file("test_ck.egtc", fs::file_size("test_ck.egtc") - 5);
    CHECK_THROWS_AS((void)egt::read_egtc("test_ck.egtc"), egt::FormatError);
  }
  SUBCASE("bad magic") {
    std::ofstream out("test_ck.egtc", std::ios::binary);
    out << "EGTX" << std::string(16, '\0');
    out.close();
    CHECK_THROWS_AS((void)egt::read_egtc("test_ck.egtc"), egt::FormatError);
  }
  std::remove("test_ck.egtc");
}

TEST_CASE("config: defaults for an empty file") {
  auto cfg = egt::parse_config("");
  CHECK(cfg.epochs == 50);
  CHECK(cfg.lr0 == 0.001);
  CHECK(cfg.step == 15);
  CHECK(cfg.gamma == 0.5);
  CHECK(cfg.tau == 0.9);
  CHECK(cfg.alpha == 0.3);
  CHECK(cfg.batch == 32);
  CHECK(cfg.image == 64);
  CHECK(cfg.classes == 9);
  CHECK(cfg.precision == egt::Precision::kF64);
  CHECK(cfg.detach_final_attention == true);
}

TEST_CASE("config: parsing, comments, and validation") {
  auto cfg = egt::parse_config(
      "# comment line\n"
      "alpha = 0.0   # baseline mode\n"
      "epochs = 25\n"
      "precision = f32\n"
      "tau = 0.8\n");
  CHECK(cfg.alpha == 0.0);
  CHECK(cfg.epochs == 25);
  CHECK(cfg.precision == egt::Precision::kF32);
  CHECK(cfg.tau == 0.8);

  try {
    (void)egt::parse_config("tau = 1.5");
    FAIL("expected ConfigError");
  } catch (const egt::ConfigError& e) {
    CHECK(e.key() == "tau");
  }
  try {
    (void)egt::parse_config("frobnicate = 3");
    FAIL("expected ConfigError");
  } catch (const egt::ConfigError& e) {
    CHECK(e.key() == "frobnicate");
  }
  CHECK_THROWS_AS((void)egt::parse_config("epochs = soon"), egt::ConfigError);
  CHECK_THROWS_AS((void)egt::parse_config("epochs = 2.5"), egt::ConfigError);
  CHECK_THROWS_AS((void)egt::parse_config("image = 16"), egt::ConfigError);
  CHECK_THROWS_AS((void)egt::load_config("does_not_exist.cfg"), egt::IoError);
}

TEST_SUITE_END();
