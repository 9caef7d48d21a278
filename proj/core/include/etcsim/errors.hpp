/**
 * @file errors.hpp
 * @brief Error taxonomy shared by every module.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace etcsim {

enum class ErrorKind {
  Parse,
  Validation,
  Argument,
  Shape,
  UndefinedBearing,
  PoleDegeneracy,
  UndefinedCorrelation,
  SingularBandwidth,
  UnsupportedConditioning,
  InsufficientTail,
  Fit,
  Domain,
  InvalidInverse,
  Separation,
  UndefinedRegion,
  Schema,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base error carrying a machine-readable kind. The CLI maps kinds to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for kinds reported as input validation problems (exit code 2).
bool is_validation_kind(ErrorKind kind) noexcept;

}  // namespace etcsim
