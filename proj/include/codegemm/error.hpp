#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace codegemm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Hyperparameters or tiling that violate a divisibility / range rule.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operand dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value-level invariant was broken (code out of range, zero norm, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrc {
  io,
  bad_magic,
  version_mismatch,
  bad_rank,
  truncated,
  trailing_bytes,
  dim_overflow,
  invariant_violation,
};

std::string_view to_string(FormatErrc code) noexcept;

// Malformed on-disk data. The code distinguishes the failure kinds.
class FormatError : public Error {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}

  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

}  // namespace codegemm
