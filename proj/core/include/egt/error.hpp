// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef EGT_ERROR_HPP_
#define EGT_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace egt {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible or invalid tensor shapes (bad extents, dim mismatches).
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

// A class label outside [0, num_classes).
class LabelError : public Error {
 public:
  explicit LabelError(const std::string& msg) : Error("label error: " + msg) {}
};

// API misuse: non-scalar backward root, missing gradient, bad exit index.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg)
      : Error("contract error: " + msg) {}
};

// Invalid configuration value or unknown key. `key` names the offender.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& msg)
      : Error("config error: key '" + key + "': " + msg), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Malformed container file. `offset` is the byte position of the defect.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, std::uint64_t offset)
      : Error("format error at byte " + std::to_string(offset) + ": " + msg),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_ = 0;
};

// Non-finite value surfaced during training; message names the tensor.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg)
      : Error("numeric error: " + msg) {}
};

// File open/read/write failures.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

}  // namespace egt

#endif  // EGT_ERROR_HPP_
