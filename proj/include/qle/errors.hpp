#pragma once

#include <stdexcept>
#include <string>

namespace qle {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A Fourier window cannot hold the requested state or the modes produced by an operation.
class WindowTooSmall : public Error {
public:
    WindowTooSmall(const std::string& what, int required_window)
        : Error(what + " (required window: " + std::to_string(required_window) + ")"),
          required_window_(required_window) {}

    int required_window() const noexcept { return required_window_; }

private:
    int required_window_;
};

// An exact Fourier-space product would need modes outside the state window.
class TruncationError : public Error {
public:
    using Error::Error;
};

// Adaptive step refinement did not settle within the allowed number of halvings.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

// A perturbation law or initial-data family lies outside the regime an operation covers.
class RegimeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace qle
