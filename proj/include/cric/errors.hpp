#pragma once

#include <stdexcept>

namespace cric {

// Error categories aligned with the CLI exit codes:
// ConfigError -> 2, DataError -> 3, NumericError -> 4.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cric
