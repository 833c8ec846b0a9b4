#pragma once

#include <stdexcept>
#include <string>

namespace fluxqp {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical parameter lies outside its admissible domain.
class ParameterDomainError : public Error {
 public:
  using Error::Error;
};

/// A basis or Hilbert-space truncation is too small for the requested object.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// A function was called with input that violates its stated contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A computed result could not be interpreted unambiguously.
class DiagnosticsError : public Error {
 public:
  using Error::Error;
};

/// Raw measurement data could not be preprocessed.
class PreprocessingError : public Error {
 public:
  using Error::Error;
};

/// A fit could not be started or was aborted.
class FitError : public Error {
 public:
  using Error::Error;
};

/// User supplied configuration or file content failed validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fluxqp
