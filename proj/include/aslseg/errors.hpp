#pragma once

#include <stdexcept>
#include <string>

namespace aslseg {

// Bad data or arguments (shape mismatches, non-finite voxels, empty inputs).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or infeasible configuration (fractions out of range, partitions too small).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal state violated an invariant (e.g. moving a slice out of unlabeled twice).
class ConsistencyError : public std::runtime_error {
public:
    explicit ConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / format problems.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A mask with no foreground where one is required (click sampling).
class EmptyMaskError : public ValidationError {
public:
    explicit EmptyMaskError(const std::string& msg) : ValidationError(msg) {}
};

} // namespace aslseg
