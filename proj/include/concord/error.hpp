#pragma once

#include <stdexcept>
#include <string>

namespace concord {

// Base class for every error thrown by this library. The CLI maps these to
// exit code 2 (input/usage) or 3 (numerical-check failure).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes do not line up for the requested operation.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// A file could not be parsed; message carries the path and line number.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(msg), line_number(line) {}
    std::size_t line_number;
};

// Invalid configuration value or combination.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A value violates a documented range contract (e.g. annotation score).
class RangeError : public Error {
public:
    explicit RangeError(const std::string& msg) : Error(msg) {}
};

// A dataset's structure is inconsistent (dangling parent ids, bad trees).
class StructuralError : public Error {
public:
    explicit StructuralError(const std::string& msg) : Error(msg) {}
};

// A backward pass was handed a cache that does not match its layer.
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Checkpoint load failures. Kept distinct so callers can tell apart a file
// that is not a checkpoint, one cut short, and one whose shapes disagree.
class CheckpointError : public Error {
public:
    explicit CheckpointError(const std::string& msg) : Error(msg) {}
};

class BadMagicError : public CheckpointError {
public:
    explicit BadMagicError(const std::string& msg) : CheckpointError(msg) {}
};

class TruncatedPayloadError : public CheckpointError {
public:
    explicit TruncatedPayloadError(const std::string& msg) : CheckpointError(msg) {}
};

class ShapeMismatchError : public CheckpointError {
public:
    explicit ShapeMismatchError(const std::string& msg) : CheckpointError(msg) {}
};

// Checkpoint and data pipeline disagree (lexicon layout, embedding dim).
class CompatibilityError : public Error {
public:
    explicit CompatibilityError(const std::string& msg) : Error(msg) {}
};

}  // namespace concord
