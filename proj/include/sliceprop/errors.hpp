#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sliceprop {

/// Thrown when an operation receives arguments violating its preconditions
/// (dimension mismatches, out-of-range probabilities, empty inputs, ...).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown on malformed file content; carries the byte offset of the defect.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

/// Thrown when a set of files is individually well-formed but mutually
/// inconsistent (e.g. mixed dimensions across a stack).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a model file declares a format version this build cannot read.
struct VersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sliceprop
