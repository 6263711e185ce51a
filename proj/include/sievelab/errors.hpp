#pragma once

#include <stdexcept>
#include <string>

namespace sievelab {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad parameters, unknown keys, under-determined fits.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid input data (non-finite cells, malformed CSV, too few rows).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a basis or mapping.
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

/// Numerical failure: singular design, degenerate bootstrap variance, NaN in a recursion.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public NumericalError {
 public:
  SingularDesignError(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

class DegenerateVarianceError : public NumericalError {
 public:
  DegenerateVarianceError(const std::string& what, double t, double x)
      : NumericalError(what), t_(t), x_(x) {}
  double t() const noexcept { return t_; }
  double x() const noexcept { return x_; }

 private:
  double t_;
  double x_;
};

}  // namespace sievelab
