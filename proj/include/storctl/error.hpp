#pragma once

#include <stdexcept>
#include <string>

namespace storctl {

/// Root of every error the library raises.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (exit code 2 at the CLI).
class InputError : public Error {
public:
  using Error::Error;
};

class ParseError : public InputError {
public:
  ParseError(const std::string& where, std::size_t line, const std::string& what)
      : InputError(where + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : InputError(what) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_ = 0;
};

class GapError : public InputError {
public:
  using InputError::InputError;
};

class EmptyTraceError : public InputError {
public:
  using InputError::InputError;
};

/// A value violates a domain rule (for example a negative demand).
class ValidationError : public InputError {
public:
  using InputError::InputError;
};

class AlignmentError : public InputError {
public:
  using InputError::InputError;
};

/// Parameter fitting failed (exit code 3).
class FitError : public Error {
public:
  using Error::Error;
};

class DegenerateFitError : public FitError {
public:
  using FitError::FitError;
};

class InsufficientSamplesError : public FitError {
public:
  using FitError::FitError;
};

/// An experiment or evaluation could not be carried out (exit code 4).
class ExperimentError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public ExperimentError {
public:
  using ExperimentError::ExperimentError;
};

/// A formula was evaluated outside the region where it is defined.
class DomainError : public ExperimentError {
public:
  using ExperimentError::ExperimentError;
};

} // namespace storctl
