#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fairrisk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter is outside its domain (alpha not in (0,1), k > atom count, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A requested axiom exists but has no mechanical check.
class UnsupportedAxiomError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// Malformed input data: invalid random variable, dataset, CSV, group weighting.
class InputError : public Error {
public:
    using Error::Error;
};

/// A metric has no value on the given input (e.g. single-class ranking).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite objective. Carries the objective trace up to
/// and including the failing epoch.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::vector<double> trace)
        : Error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

}  // namespace fairrisk
