// errors.hpp — exception hierarchy shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace oqs {

// Malformed basis / space description.
struct InvalidSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Shape or subsystem-layout mismatch.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operator violates a structural precondition (e.g. non-Hermitian H).
struct InvalidOperator : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Physical parameter outside its admissible range.
struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Request outside the regime where a formula is meaningful.
struct RegimeError : std::domain_error {
    using std::domain_error::domain_error;
};

// Adaptive algorithm failed to meet its tolerance.
struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf or other breakdown during integration.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration file problems (unknown keys, wrong types, unreadable file).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace oqs
