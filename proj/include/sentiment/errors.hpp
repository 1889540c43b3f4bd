// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sentiment {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or size disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Problem with input data (dataset rows, token files, embeddings).
// `line` is 1-based; 0 when the error is not tied to a line.
class DataError : public Error {
 public:
  DataError(std::string path, std::size_t line, const std::string& what)
      : Error(format(path, line, what)), path_(std::move(path)), line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& path, std::size_t line,
                            const std::string& what) {
    std::string out = path.empty() ? std::string("<input>") : path;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + what;
  }

  std::string path_;
  std::size_t line_;
};

// Invalid configuration value; `key` names the offending setting.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Unreadable, corrupt or version-incompatible checkpoint.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// A model, vocabulary or cache does not match what it is used with.
class ModelMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace sentiment
