#pragma once

#include <stdexcept>
#include <string>

namespace mave {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config / precondition violations (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};
struct EmptySecretError : ConfigError {
    EmptySecretError() : ConfigError("secret payload is empty") {}
};
struct LayoutOverflowError : ConfigError {
    using ConfigError::ConfigError;
};

// Registry errors.
struct DuplicateIndexError : Error {
    using Error::Error;
};
struct NotFoundError : Error {
    using Error::Error;
};

// Malformed files (CLI exit code 3).
struct FormatError : Error {
    using Error::Error;
};

// Temporal synchronization found no plausible offset.
struct SyncFailedError : Error {
    using Error::Error;
};

}  // namespace mave
