#pragma once

#include <stdexcept>
#include <string>

namespace inferometer {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid input data or configuration: failed invariants, malformed
/// documents, dangling references, degenerate fits.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Filesystem-level failures: missing files, unreadable or unwritable paths.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace inferometer
