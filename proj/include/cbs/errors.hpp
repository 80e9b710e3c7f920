#pragma once

#include <stdexcept>
#include <string>

namespace cbs {

/// Bad user input: out-of-range hyperparameters, mismatched shapes,
/// malformed config values. CLI maps this to exit code 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File-level failure: unreadable path, wrong magic, version or checksum
/// mismatch. CLI maps this (and any other runtime failure) to exit code 4.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cbs
