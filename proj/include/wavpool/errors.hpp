#pragma once

#include <stdexcept>
#include <string>

namespace wavpool {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or dimension mismatch between tensors / layers.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Out-of-range level or element index.
class IndexError : public Error {
public:
    using Error::Error;
};

// Input too small to decompose with the chosen wavelet.
class SignalTooSmallError : public Error {
public:
    using Error::Error;
};

// Malformed input file (bad magic, unsupported image, bad record size).
class FormatError : public Error {
public:
    using Error::Error;
};

// Files or tensors that disagree with each other (truncated payload,
// image/label count mismatch, insufficient data for a split).
class DataConsistencyError : public Error {
public:
    using Error::Error;
};

// Invalid model or search configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Class label outside [0, num_classes).
class LabelError : public Error {
public:
    using Error::Error;
};

// Layer protocol violation (e.g. backward before forward).
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Mutually inconsistent decomposition levels.
class CorruptionError : public Error {
public:
    using Error::Error;
};

// Batch norm trained on a batch of one.
class DegenerateBatchError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, int epoch, double lr)
        : Error(msg), epoch(epoch), learning_rate(lr) {}
    int epoch;
    double learning_rate;
};

}  // namespace wavpool
