#pragma once

#include <stdexcept>
#include <string>

namespace gmocap {

// Base class for everything this library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input data: malformed files, inconsistent dimensions, unknown schema
// versions. The CLI maps these to exit code 2.
struct ValidationError : Error {
    using Error::Error;
};

// Numerical failure during computation. The CLI maps these to exit code 3.
struct NumericError : Error {
    using Error::Error;
};

struct DegenerateRotation6D : NumericError {
    using NumericError::NumericError;
};

struct BehindCamera : NumericError {
    using NumericError::NumericError;
};

struct InsufficientPoints : NumericError {
    using NumericError::NumericError;
};

struct SingularConfiguration : NumericError {
    using NumericError::NumericError;
};

struct DegenerateHeading : NumericError {
    using NumericError::NumericError;
};

struct InsufficientData : ValidationError {
    using ValidationError::ValidationError;
};

struct NonFiniteLoss : NumericError {
    using NumericError::NumericError;
};

struct NonFiniteGradient : NumericError {
    using NumericError::NumericError;
};

struct InitializationFailed : NumericError {
    using NumericError::NumericError;
};

} // namespace gmocap
