#pragma once

#include <stdexcept>
#include <string>

namespace spherekit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A malformed document or argument. `field` names the offending location,
// e.g. "edges[3].len".
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& message, double residual)
      : Error(message), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace spherekit
