#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tga {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape mismatch in a dense-algebra primitive; message names the operation and shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Malformed input data; carries the 1-based line number when known.
struct ParseError : Error {
    explicit ParseError(const std::string& msg, std::size_t line_no = 0)
        : Error(line_no ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
    std::size_t line = 0;
};

// Invalid configuration or window specification.
struct SpecError : Error {
    using Error::Error;
};

// API contract violation (wrong node kind, non-scalar root, ...).
struct ContractError : Error {
    using Error::Error;
};

struct EmptyNetworkError : Error {
    using Error::Error;
};

struct DivergenceError : Error {
    DivergenceError(std::size_t at_epoch, double lr)
        : Error("training diverged (non-finite loss) at epoch " + std::to_string(at_epoch) +
                " with learning rate " + std::to_string(lr)),
          epoch(at_epoch), learning_rate(lr) {}
    std::size_t epoch;
    double learning_rate;
};

// Checkpoint/dataset dimension mismatch.
struct IncompatibleError : Error {
    using Error::Error;
};

struct ResourceError : Error {
    using Error::Error;
};

struct NoTargetsError : Error {
    using Error::Error;
};

struct ComparisonError : Error {
    using Error::Error;
};

} // namespace tga
