#pragma once

#include <stdexcept>
#include <string>

namespace pmsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: non-Hermitian matrix, dimension mismatch, bad index.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Grid, packet or composite dimension outside the supported range.
class SizingError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (e.g. t outside [0, T]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A physical precondition is violated (degenerate eigenstate, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Configuration is inconsistent with the requested measurement mode.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// The generalized pointer cannot be constructed for this apparatus.
class SetupError : public Error {
 public:
  using Error::Error;
};

/// Pointer probability is too close to the periodic box edge to read out.
class WraparoundError : public Error {
 public:
  WraparoundError(const std::string& what, double edge_mass)
      : Error(what), edge_mass_(edge_mass) {}
  double edge_mass() const noexcept { return edge_mass_; }

 private:
  double edge_mass_;
};

/// Step doubling did not reach the requested tolerance before the step cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_estimate, long last_steps)
      : Error(what), last_estimate_(last_estimate), last_steps_(last_steps) {}
  double last_estimate() const noexcept { return last_estimate_; }
  long last_steps() const noexcept { return last_steps_; }

 private:
  double last_estimate_;
  long last_steps_;
};

/// Configuration file could not be parsed; `field()` names the offending key.
class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmsim
