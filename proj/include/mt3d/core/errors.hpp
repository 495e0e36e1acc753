#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mt3d {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (ranges, intervals, unknown keys, missing files).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that cannot be used (empty asset, malformed PLY, empty text).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Caller violated an API contract (shape mismatch and similar).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input is well formed but mathematically degenerate (zero mass image, blank sweep).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// A Gaussian carries a non-finite parameter.
class RenderError : public Error {
public:
    RenderError(std::size_t gaussian_index, const std::string& what)
        : Error("gaussian " + std::to_string(gaussian_index) + ": " + what),
          gaussian_index_(gaussian_index) {}

    std::size_t gaussian_index() const noexcept { return gaussian_index_; }

private:
    std::size_t gaussian_index_;
};

/// Optimization produced a non-finite loss or gradient.
class NumericalAbort : public Error {
public:
    using Error::Error;
};

}  // namespace mt3d
