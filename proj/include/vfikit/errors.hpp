#pragma once

#include <stdexcept>
#include <string>

namespace vfikit {

// Base for everything thrown by this library. The CLI maps each subclass
// to a stable error-class token on stderr.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual const char* error_class() const noexcept { return "error"; }
};

// Tensor/network shape violations (channel mismatch, indivisible dims, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
  const char* error_class() const noexcept override { return "dimension"; }
};

// Precondition violations that are not shape related (t outside (0,1),
// non-scalar loss, gt-coeffs mode without ground truth, ...).
class ContractError : public Error {
 public:
  using Error::Error;
  const char* error_class() const noexcept override { return "contract"; }
};

// Malformed file contents (bad magic, truncated payload, bad manifest row).
class FormatError : public Error {
 public:
  using Error::Error;
  const char* error_class() const noexcept override { return "format"; }
};

// Filesystem-level failures (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
  const char* error_class() const noexcept override { return "io"; }
};

// Numeric failures that abort a run (NaN loss during training).
class NumericError : public Error {
 public:
  using Error::Error;
  const char* error_class() const noexcept override { return "numeric"; }
};

}  // namespace vfikit
