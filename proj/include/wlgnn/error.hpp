#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wlgnn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class ValidationKind {
  self_loop,
  missing_node,
  unknown_node,
  duplicate_node,
  dimension_mismatch,
  non_finite,
  row_count,
  bad_pair,
};

/// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  ValidationError(ValidationKind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  ValidationKind kind() const noexcept { return kind_; }

 private:
  ValidationKind kind_;
};

/// Out-of-range configuration value (ratio, k, position, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent tensor or bundle dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Not enough candidate pairs left to draw the requested negatives.
class SamplingExhausted : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace wlgnn
