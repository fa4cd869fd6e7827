#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wtm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two waveforms (or a waveform and a grid) that do not share a time grid.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// A sample that must be strictly positive (impedance, divisor) was not.
class NonPositiveSample : public Error {
public:
    NonPositiveSample(const std::string& what, std::size_t index)
        : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Problem-file syntax or consistency error; line is 1-based, 0 if not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class PartitionError : public Error {
public:
    using Error::Error;
};

class FactorizationError : public Error {
public:
    using Error::Error;
};

class HistoryError : public Error {
public:
    using Error::Error;
};

/// Raised when any waveform sample exceeds the configured divergence cap.
class DivergenceError : public Error {
public:
    DivergenceError(int sweep, double magnitude)
        : Error("iteration diverged at sweep " + std::to_string(sweep) + " (|x| = " +
                std::to_string(magnitude) + ")"),
          sweep_(sweep), magnitude_(magnitude) {}
    int sweep() const noexcept { return sweep_; }
    double magnitude() const noexcept { return magnitude_; }

private:
    int sweep_;
    double magnitude_;
};

}  // namespace wtm
