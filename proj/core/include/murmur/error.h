#pragma once

#include <stdexcept>
#include <string>

namespace murmur {

// All library failures derive from Error so callers can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Input bytes are readable but not in a supported encoding.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A value argument violates its documented precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Tensor extents do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A manifest, fold plan, or similar artifact is internally inconsistent.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A run configuration cannot be executed (e.g. single-class training fold).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A persisted artifact failed its integrity check.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Training diverged (NaN/Inf loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace murmur
