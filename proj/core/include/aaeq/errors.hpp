#pragma once

#include <stdexcept>
#include <string>

namespace aaeq {

// Invalid arguments use std::invalid_argument directly. The types below carry
// the remaining failure categories that callers are expected to distinguish.

/// A configuration value is out of range or inconsistent. `field()` names the
/// offending key path (for example "eq.beta") when it is known.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& message, std::string field = {})
        : std::invalid_argument(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Input carries no usable signal (all-zero waveform, all-zero weights).
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An operation was called on an object that has not been initialized.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Too few samples or symbols to produce a meaningful estimate.
class InsufficientData : public std::length_error {
public:
    using std::length_error::length_error;
};

/// No polarization/rotation/delay candidate explains the received symbols.
class AlignmentFailure : public std::runtime_error {
public:
    AlignmentFailure(const std::string& message, double best_symbol_error_rate)
        : std::runtime_error(message), best_ser_(best_symbol_error_rate) {}

    double best_symbol_error_rate() const noexcept { return best_ser_; }

private:
    double best_ser_;
};

/// Adaptive weights left their admissible range.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& message, double time_s)
        : std::runtime_error(message), time_(time_s) {}

    /// Simulation time (seconds) at which the bound was first exceeded.
    double time() const noexcept { return time_; }

private:
    double time_;
};

} // namespace aaeq
