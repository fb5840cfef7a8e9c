#ifndef PATANKAR_ERROR_HPP_
#define PATANKAR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace patankar {

// Base class for all library errors. Each subclass maps to one failure class
// so the CLI can translate it into an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// A state violates an admissibility requirement (non-positive where positivity
// is required, non-finite values, ...).
class InvalidState : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

class UnavailableDiagnostic : public Error {
 public:
  using Error::Error;
};

class NoShock : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace patankar

#endif  // PATANKAR_ERROR_HPP_
