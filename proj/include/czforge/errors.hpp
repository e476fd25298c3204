#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace czforge {

/// Input outside the mathematical domain of an operation (negative energy, |d| > 1, ...).
class ParameterDomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inductively shunted transmon biased outside its single-well regime (E_L <= E_J).
class SingleWellError : public ParameterDomainError {
public:
    using ParameterDomainError::ParameterDomainError;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A requested dressed state could not be assigned to a unique bare state.
class LabelingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PhaseUndefinedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidPulseError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-fatal diagnostics (regime warnings, clamped samples, convergence notes).
using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink() {
    static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return sink;
}

inline void set_warning_sink(WarningSink sink) { warning_sink() = std::move(sink); }

inline void warn(const std::string& msg) {
    if (auto& sink = warning_sink()) {
        sink(msg);
    }
}

}  // namespace czforge
