#pragma once

#include <stdexcept>
#include <string>

namespace t2p {

// Error taxonomy used across the library. The CLI maps these to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad data handed to an operation (empty sequence, zero vector, ...).
struct InvalidInputError : Error {
    using Error::Error;
};

// Inconsistent wiring: dimension mismatches, bad layer setup.
struct ConfigError : Error {
    using Error::Error;
};

// Operation called in the wrong order (backward before forward, ...).
struct StateError : Error {
    using Error::Error;
};

// A file exists but cannot be parsed/validated.
struct LoadError : Error {
    using Error::Error;
};

// A required file/resource is absent.
struct MissingResourceError : Error {
    using Error::Error;
};

}  // namespace t2p
