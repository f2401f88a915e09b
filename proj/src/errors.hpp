#pragma once

#include <stdexcept>
#include <string>

namespace smbbayes {

/// Base of all library errors. The C API maps subclasses to status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration, out-of-range arguments, malformed files (exit code 2).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An operating point whose derived zone flowrates are not all positive.
class InfeasibleOperatingPoint : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Solver, integrator or statistics failures (exit code 1).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotConverged : public NumericalError {
 public:
  NotConverged(const std::string& what, double last_metric, int switches)
      : NumericalError(what), last_metric_(last_metric), switches_(switches) {}
  double last_metric() const { return last_metric_; }
  int switches() const { return switches_; }

 private:
  double last_metric_;
  int switches_;
};

/// A quantity that is mathematically undefined for the given data
/// (zero within-chain variance, all-zero port concentrations, ...).
class Undefined : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace smbbayes
