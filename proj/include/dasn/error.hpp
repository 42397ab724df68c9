#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dasn {

// Base of every error raised by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

// Violated precondition on the caller's side (non-scalar root, missing
// gradient, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf observed at an op boundary.
class NumericError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, std::string term)
      : Error("divergence at iteration " + std::to_string(iteration) +
              " in loss term " + term),
        iteration_(iteration),
        term_(std::move(term)) {}

  std::size_t iteration() const { return iteration_; }
  const std::string& term() const { return term_; }

 private:
  std::size_t iteration_;
  std::string term_;
};

}  // namespace dasn
