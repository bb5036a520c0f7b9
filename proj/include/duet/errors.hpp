#pragma once

#include <stdexcept>
#include <string>

namespace duet {

/// Invalid shapes, option values or config keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs outside the domain an operation is defined on.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite gradients or losses during optimization.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric could not be computed for a given input (e.g. a decay curve
/// that never reaches the fit range).
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, truncated or malformed files.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace duet
