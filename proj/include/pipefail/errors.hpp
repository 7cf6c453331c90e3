#pragma once

#include <stdexcept>
#include <string>

namespace pipefail {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration or operation arguments (CLI exit code 2).
struct InvalidArgument : Error {
    using Error::Error;
};

// Input data failed validation: schema, parse, or integrity problems (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};

// A solver finished without meeting its convergence criterion (CLI exit code 4).
struct ConvergenceError : Error {
    using Error::Error;
};

}  // namespace pipefail
