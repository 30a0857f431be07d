#pragma once

#include <stdexcept>
#include <string>

namespace dipex {

/// Base of every error raised by the library. The CLI maps these to exit
/// code 2.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
public:
  using Error::Error;
};

/// Malformed dataset, dipole list, scene or run-config input.
class SchemaError : public Error {
public:
  using Error::Error;
};

/// Observation point coincides with a source (or its ground image).
class SingularityError : public Error {
public:
  using Error::Error;
};

class IllConditionedError : public Error {
public:
  IllConditionedError(const std::string &what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Relative error requested against an all-zero measurement.
class MetricError : public Error {
public:
  using Error::Error;
};

} // namespace dipex
