#pragma once

#include <stdexcept>
#include <string>

namespace bladerag {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration: malformed config file, missing model identifier,
/// HTTP 4xx from a service (misconfigured endpoint or credentials).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Knowledge-base problems: duplicate ids, malformed layout, schema-version
/// mismatch, unreadable image locator.
class KnowledgeBaseError : public Error {
public:
    using Error::Error;
};

/// Vector-index problems: corrupt file, empty index where one is required.
class IndexError : public Error {
public:
    using Error::Error;
};

/// A vector of the wrong dimension was produced or supplied.
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

/// Transport-level failure that persisted through all retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// The remote service answered, but not in the agreed shape
/// (missing fields, empty completion).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Replay transport was asked for an exchange it has no fixture for.
class MissingFixtureError : public TransportError {
public:
    using TransportError::TransportError;
};

/// Filesystem failure during persist/load.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace bladerag
