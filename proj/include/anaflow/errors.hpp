#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace anaflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Netlist syntax or resolution failure. Carries one diagnostic per offending
/// card; what() joins them with newlines so the text can be fed back verbatim.
class ParseError : public Error {
public:
    explicit ParseError(std::vector<std::string> diagnostics);
    explicit ParseError(std::string diagnostic);

    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

/// Subcircuit expansion failure (recursion, arity mismatch, model collision).
class FlattenError : public Error {
public:
    using Error::Error;
};

/// Solver failure: singular matrix, non-convergence, bad analysis arguments.
class SimulationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Generator could not be reached after its retries.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace anaflow
