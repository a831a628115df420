#pragma once

#include <stdexcept>

namespace pmclass {

// Error taxonomy. The CLI maps these onto distinct exit codes
// (config = 2, data = 3, numeric = 4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments, flags, shapes, or out-of-range hyperparameters.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed input files, invalid sensor rows, schema mismatches.
struct DataError : Error {
    using Error::Error;
};

// Non-finite values where finite arithmetic is required.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace pmclass
