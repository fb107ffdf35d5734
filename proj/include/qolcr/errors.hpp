#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qolcr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (bad physical values, bad field).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The data did not support a trustworthy result (calibration, peak fit).
class QualityError : public Error {
 public:
  using Error::Error;
};

/// Fewer autocorrelation peak clusters than requested were found.
class InsufficientPeaksError : public QualityError {
 public:
  using QualityError::QualityError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qolcr
