#pragma once

#include <stdexcept>
#include <string>

namespace hwad {

// Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2,
// NumericError -> 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StrokeTooShort : DataError {
  using DataError::DataError;
};

struct DegenerateStroke : DataError {
  using DataError::DataError;
};

struct EmptyFit : DataError {
  using DataError::DataError;
};

}  // namespace hwad
