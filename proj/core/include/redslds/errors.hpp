#pragma once

#include <stdexcept>
#include <string>

namespace redslds {

/// Invalid configuration or hyperparameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or degenerate input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical failure that survived the jitter schedule (non-PD matrices,
/// all-zero filter slices, ...). The message carries sequence/time context
/// when the thrower knows it.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace redslds
