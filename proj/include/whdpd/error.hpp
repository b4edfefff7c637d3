#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace whdpd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad length, bad range, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Cross-correlation peak fell below the configured floor.
class AlignmentError : public Error {
public:
    AlignmentError(const std::string& what, double peak)
        : Error(what), peak_(peak) {}
    double peak() const noexcept { return peak_; }

private:
    double peak_;
};

/// The training loss became non-finite.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : Error(what), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// Malformed configuration, model or channel document.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace whdpd
