#pragma once

#include <stdexcept>
#include <string>

namespace mgl {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Column missing, wrong kind, duplicate name, unknown attribute.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Cell value outside the admissible domain (bad label, unparsable number).
class ValueError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training was requested on a group with no examples.
class EmptyGroupError : public Error {
 public:
  using Error::Error;
};

// An example is not covered by any leaf of a partition predictor.
class RoutingError : public Error {
 public:
  using Error::Error;
};

// A model file does not belong to the data it is checked against.
class MismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgl
