#pragma once

#include <stdexcept>
#include <string>

namespace siou {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes: DataError -> 2, NumericalError -> 3.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

class InvalidBox : public DataError {
public:
  using DataError::DataError;
};

class InvalidArgument : public DataError {
public:
  using DataError::DataError;
};

class InsufficientSamples : public DataError {
public:
  using DataError::DataError;
};

class DegenerateInput : public DataError {
public:
  using DataError::DataError;
};

class EmptyCell : public DataError {
public:
  using DataError::DataError;
};

class ParseError : public DataError {
public:
  using DataError::DataError;
};

// Raised for inputs outside a function's mathematical domain, e.g. the
// reweighting ratios at IoU in {0, 1}.
class DomainError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class NonDifferentiablePoint : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class QuadratureNonConvergence : public NumericalError {
public:
  QuadratureNonConvergence(const std::string& what, double estimate, double error)
      : NumericalError(what), estimate_(estimate), error_(error) {}

  double estimate() const noexcept { return estimate_; }
  double error_estimate() const noexcept { return error_; }

private:
  double estimate_;
  double error_;
};

} // namespace siou
