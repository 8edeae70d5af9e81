#pragma once

#include <stdexcept>
#include <string>

namespace poisonprobe {

/// Dimension mismatches, empty masks, out-of-range hyperparameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a selection routine is asked to pick from an empty set.
class NoCandidateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files. The message carries the path and line number.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace poisonprobe
