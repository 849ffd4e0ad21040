#pragma once

#include <stdexcept>
#include <string>

namespace langevin {

// Base for every error the library raises. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-facing parameters (grid step, path count, unknown config key).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An operation was called outside its documented domain.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A lazily extended path (usually B') would need more steps than its cap.
class HorizonError : public Error {
 public:
  using Error::Error;
};

// The counterexample force could not be built at the requested settings.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// A verification gate exceeded its tolerance.
class GateError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

}  // namespace langevin
