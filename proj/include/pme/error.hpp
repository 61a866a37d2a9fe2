#pragma once

#include <stdexcept>
#include <string>

namespace pme {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (e.g. rho <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The warping function violates positivity, the class A limits or convexity.
class InvalidManifold : public Error {
 public:
  using Error::Error;
};

/// Drift growth along the probe grid is faster than quadratic.
class NotCritical : public Error {
 public:
  NotCritical(const std::string& what, double probe) : Error(what), probe_(probe) {}
  double probe() const noexcept { return probe_; }

 private:
  double probe_;
};

/// A construction needs a certificate the model does not carry.
class NotApplicable : public Error {
 public:
  using Error::Error;
};

class TailMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Newton failed even after the maximal number of step halvings.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double t, double dt) : Error(what), t_(t), dt_(dt) {}
  double time() const noexcept { return t_; }
  double last_dt() const noexcept { return dt_; }

 private:
  double t_;
  double dt_;
};

class StageFailure : public Error {
 public:
  StageFailure(const std::string& what, int stage) : Error(what), stage_(stage) {}
  int stage() const noexcept { return stage_; }

 private:
  int stage_;
};

}  // namespace pme
