#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mowave {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (e.g. time outside a polyline).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid or degenerate geometry: coincident points, overlapping objects.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value. `field()` names the offending key when known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg, std::string field = {})
      : Error(field.empty() ? msg : field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Emitter speed reaches or exceeds the sound speed.
class SubsonicError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& msg, double residual)
      : Error(msg + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Singular collocation matrix during time marching.
class AssemblyError : public Error {
 public:
  AssemblyError(const std::string& msg, std::size_t step)
      : Error(msg + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Data record carries no energy, so a normalized indicator is undefined.
class EmptyDataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mowave
