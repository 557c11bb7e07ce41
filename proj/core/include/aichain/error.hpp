#pragma once

#include <stdexcept>
#include <string>

namespace aichain {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input data (bad identifiers, bad JSON shape).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Expression evaluation failures: unbound variables, non-numeric ordering operands.
class EvalError : public Error {
 public:
  using Error::Error;
};

// Operation issued in a session state that does not allow it.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Lookup of a named artifact (engine, prompt, project, session) that does not exist.
class NotFound : public Error {
 public:
  using Error::Error;
};

// Name clash on insert without an explicit overwrite.
class Conflict : public Error {
 public:
  using Error::Error;
};

// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace aichain
