#pragma once

#include <stdexcept>

namespace ccasched {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: validation -> 2, data -> 3, numeric -> 4.

// Bad arguments, bad configuration, violated preconditions.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, tables, lookups).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: singular fits, divergent training, undefined statistics.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ccasched
