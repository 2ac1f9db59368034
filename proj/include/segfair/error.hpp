#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace segfair {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid caller-supplied argument (precondition violation).
class ArgError : public Error {
public:
    explicit ArgError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failure (open, read, write).
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed file content. Carries the byte offset of the defect when known.
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::optional<std::uint64_t> byte_offset = std::nullopt)
        : Error(byte_offset ? msg + " (byte offset " + std::to_string(*byte_offset) + ")" : msg),
          offset(byte_offset) {}

    std::optional<std::uint64_t> offset;
};

// An experiment design cannot be realized on the given cohort
// (insufficient strata, group smaller than fold count, ...).
class DesignError : public Error {
public:
    explicit DesignError(const std::string& msg) : Error(msg) {}
};

// Internal invariant violation; indicates a bug, not bad input.
class InternalError : public Error {
public:
    explicit InternalError(const std::string& msg) : Error(msg) {}
};

} // namespace segfair
