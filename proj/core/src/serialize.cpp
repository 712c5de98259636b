// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#include "egt/serialize.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "egt/error.hpp"

namespace egt {
namespace {

constexpr std::uint32_t kContainerVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

class Writer {
 public:
  Writer(const std::string& path) : path_(path), file_(open_file(path, "wb")) {}

  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    raw(b, 4);
  }

  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }

  void f32_array(const float* data, std::size_t n) {
    // Little-endian host fast path; the portable path matches it bit-exactly.
    if (is_little_endian()) {
      raw(data, n * 4);
    } else {
      for (std::size_t i = 0; i < n; ++i) f32(data[i]);
    }
  }

  void raw(const void* data, std::size_t n) {
    if (std::fwrite(data, 1, n, file_.get()) != n) {
      throw IoError("short write to '" + path_ + "'");
    }
  }

  static bool is_little_endian() {
    const std::uint32_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
  }

 private:
  std::string path_;
  FilePtr file_;
};

class Reader {
 public:
  Reader(const std::string& path) : path_(path), file_(open_file(path, "rb")) {}

  std::uint64_t offset() const { return offset_; }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    raw(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  void f32_array(float* out, std::size_t n, const char* what) {
    if (Writer::is_little_endian()) {
      raw(out, n * 4, what);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = u32(what);
        std::memcpy(&out[i], &bits, 4);
      }
    }
  }

  void raw(void* out, std::size_t n, const char* what) {
    const std::size_t got = std::fread(out, 1, n, file_.get());
    if (got != n) {
      throw FormatError(std::string("truncated file while reading ") + what +
                            " in '" + path_ + "'",
                        offset_ + got);
    }
    offset_ += n;
  }

  void expect_magic(const char expected[4]) {
    char magic[4];
    const std::size_t got = std::fread(magic, 1, 4, file_.get());
    if (got != 4) {
      throw FormatError("missing magic in '" + path_ + "'", got);
    }
    offset_ += 4;
    if (std::memcmp(magic, expected, 4) != 0) {
      throw FormatError("bad magic in '" + path_ + "' (expected " +
                            std::string(expected, 4) + ")",
                        0);
    }
  }

 private:
  std::string path_;
  FilePtr file_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_egtc(const std::string& path,
                const std::vector<NamedTensorF32>& tensors) {
  Writer w(path);
  w.raw("EGTC", 4);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.raw(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    std::uint64_t numel = 1;
    for (auto d : t.dims) {
      w.u32(d);
      numel *= d;
    }
    if (numel != t.data.size()) {
      throw ContractError("tensor '" + t.name + "' dims do not match payload");
    }
    w.f32_array(t.data.data(), t.data.size());
  }
}

std::vector<NamedTensorF32> read_egtc(const std::string& path) {
  Reader r(path);
  r.expect_magic("EGTC");
  const std::uint32_t version = r.u32("version");
  if (version != kContainerVersion) {
    throw FormatError("unsupported EGTC version " + std::to_string(version),
                      r.offset() - 4);
  }
  const std::uint32_t count = r.u32("tensor count");
  std::vector<NamedTensorF32> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensorF32 t;
    const std::uint32_t name_len = r.u32("name length");
    if (name_len > (1u << 20)) {
      throw FormatError("unreasonable name length " + std::to_string(name_len),
                        r.offset() - 4);
    }
    t.name.resize(name_len);
    r.raw(t.name.data(), name_len, "tensor name");
    const std::uint32_t rank = r.u32("rank");
    if (rank > 8) {
      throw FormatError("unreasonable rank " + std::to_string(rank),
                        r.offset() - 4);
    }
    std::uint64_t numel = 1;
    t.dims.resize(rank);
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims[d] = r.u32("dim");
      if (t.dims[d] == 0) {
        throw FormatError("zero extent in tensor '" + t.name + "'",
                          r.offset() - 4);
      }
      numel *= t.dims[d];
    }
    t.data.resize(numel);
    r.f32_array(t.data.data(), numel, ("payload of '" + t.name + "'").c_str());
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void write_egtd(const std::string& path, const Dataset& dataset) {
  dataset.validate();
  Writer w(path);
  w.raw("EGTD", 4);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(dataset.count()));
  w.u32(static_cast<std::uint32_t>(dataset.channels));
  w.u32(static_cast<std::uint32_t>(dataset.height));
  w.u32(static_cast<std::uint32_t>(dataset.width));
  w.u32(static_cast<std::uint32_t>(dataset.num_classes));
  const std::int64_t ss = dataset.sample_size();
  for (std::int64_t i = 0; i < dataset.count(); ++i) {
    w.u32(static_cast<std::uint32_t>(dataset.labels[static_cast<std::size_t>(i)]));
    w.f32_array(dataset.sample(i), static_cast<std::size_t>(ss));
  }
}

Dataset read_egtd(const std::string& path) {
  Reader r(path);
  r.expect_magic("EGTD");
  const std::uint32_t version = r.u32("version");
  if (version != kContainerVersion) {
    throw FormatError("unsupported EGTD version " + std::to_string(version),
                      r.offset() - 4);
  }
  Dataset d;
  const std::uint32_t count = r.u32("sample count");
  d.channels = r.u32("channels");
  d.height = r.u32("height");
  d.width = r.u32("width");
  d.num_classes = static_cast<int>(r.u32("num_classes"));
  if (d.channels < 1 || d.height < 1 || d.width < 1 || d.num_classes < 2) {
    throw FormatError("invalid dataset header", 8);
  }
  const std::int64_t ss = d.sample_size();
  d.labels.reserve(count);
  d.images.resize(static_cast<std::size_t>(count) *
                  static_cast<std::size_t>(ss));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t label_offset = r.offset();
    const std::uint32_t label = r.u32("label");
    if (label >= static_cast<std::uint32_t>(d.num_classes)) {
      throw FormatError("label " + std::to_string(label) + " >= num_classes " +
                            std::to_string(d.num_classes),
                        label_offset);
    }
    d.labels.push_back(static_cast<std::int32_t>(label));
    r.f32_array(d.images.data() + static_cast<std::size_t>(i) *
                                      static_cast<std::size_t>(ss),
                static_cast<std::size_t>(ss), "pixels");
  }
  return d;
}

}  // namespace egt
