#pragma once

#include <stdexcept>
#include <string>

namespace itseval {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad input data or configuration: malformed files, unknown ids,
/// inconsistent windows. Maps to CLI exit code 2.
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

/// A model could not be estimated: rank deficiency, perfect separation,
/// non-stationary AR estimate. Maps to CLI exit code 1 when partial.
struct FitError : Error {
    explicit FitError(const std::string& msg) : Error(msg) {}
};

}  // namespace itseval
