#pragma once

#include <stdexcept>
#include <string>

namespace ddelyap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of an operation (e.g. a point not in K).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The quantity is not defined, e.g. sign changes of the zero function.
class UndefinedValueError : public Error {
 public:
  using Error::Error;
};

// Non-finite evaluator output.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int index) : Error(what), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

// A history or trajectory was read outside of its covered interval.
class CoverageError : public Error {
 public:
  using Error::Error;
};

// Root finder, fixed-point iteration or step-size control failed.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Invalid model or scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A hard invariant was violated at runtime (e.g. c-positivity).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddelyap
