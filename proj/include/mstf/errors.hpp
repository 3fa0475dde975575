#pragma once

#include <stdexcept>
#include <string>

namespace mstf {

/// Shape or dimension contract violation (caller bug or bad configuration).
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed external data: CSV rows, config files, checkpoints, empty sets.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values where the numeric contract requires finiteness.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mstf
