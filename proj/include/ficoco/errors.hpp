#pragma once

#include <stdexcept>
#include <string>

namespace ficoco {

// Every engine failure carries a short class name so the CLI and the Python
// bindings can report it without string matching on messages.
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string& message)
      : std::runtime_error(message), class_(std::move(error_class)) {}

  const std::string& error_class() const noexcept { return class_; }

 private:
  std::string class_;
};

/// Malformed, out-of-range or unknown configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

/// Unreadable or malformed files (tensor headers, truncated payloads, JSON).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("format", message) {}
};

/// Tensor dtype other than little-endian float32.
class DtypeError : public Error {
 public:
  explicit DtypeError(const std::string& message) : Error("dtype", message) {}
};

/// Operand shapes disagree with each other or with the token layout.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error("shape", message) {}
};

/// A stage precondition failed (budget too large, missing text tokens, ...).
class StageError : public Error {
 public:
  explicit StageError(const std::string& message) : Error("stage", message) {}
};

/// The layout has no CLS token; use the key-mean equivalent instead.
class AbsentClsError : public Error {
 public:
  explicit AbsentClsError(const std::string& message) : Error("absent_cls", message) {}
};

/// Integer FLOP count exceeded the representable range.
class OverflowError : public Error {
 public:
  explicit OverflowError(const std::string& message) : Error("overflow", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace ficoco
