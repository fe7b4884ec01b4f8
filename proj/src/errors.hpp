#pragma once

#include <stdexcept>
#include <string>

namespace gbv {

// Bad inputs: dimension mismatches, out-of-domain arguments, invalid data.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// A model evaluation produced NaN or was otherwise unusable.
class EvaluationError : public std::runtime_error {
 public:
  explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical procedure failed (non-PD matrix, singular system, stuck chain).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// File ingestion/serialization problems.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Requested operation outside supported range (e.g. grid in D > 2).
class UnsupportedError : public std::runtime_error {
 public:
  explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gbv
