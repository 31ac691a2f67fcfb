#pragma once

#include <stdexcept>
#include <string>

namespace vqcnir {

/// Tensor extents disagree with what an operation requires.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration value violates a structural constraint (divisibility, ranges, unknown keys).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An API precondition was violated by the caller.
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file contents (PPM, checkpoint, manifest).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vqcnir
