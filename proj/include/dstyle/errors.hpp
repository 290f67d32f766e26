#pragma once

#include <stdexcept>
#include <string>

namespace dstyle {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV row, JSON document, binary header).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input that parses but violates a data invariant or precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A quantity that is not defined for the given sample (THW at v = 0, ...).
class UndefinedFeatureError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Numerical failure: singular systems, empty clusters, no rule fired.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Value does not fit the fixed-point format it is being placed in.
class QuantizationError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Upstream artifact is missing or was produced by a different configuration.
class ArtifactError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace dstyle
