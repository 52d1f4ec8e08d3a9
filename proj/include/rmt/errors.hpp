#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rmt
{

// Bad dimensions, non-finite entries, violated preconditions.
class InvalidInput : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// Generic numerical failure; the CLI maps every subclass to exit code 2.
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class NoConvergence : public NumericalError
{
public:
  NoConvergence(const std::string &what, double best_residual)
    : NumericalError(what), best_residual(best_residual)
  {
  }
  double best_residual;
};

class PoleProximity : public NumericalError
{
public:
  PoleProximity(const std::string &what, std::size_t nearest_pole)
    : NumericalError(what), nearest_pole(nearest_pole)
  {
  }
  std::size_t nearest_pole;
};

class SecularAnomaly : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

class StructuralError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

class StepFailure : public NumericalError
{
public:
  StepFailure(const std::string &what, double time) : NumericalError(what), time(time) {}
  double time;
};

class SingularCoefficient : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

class StabilityViolation : public NumericalError
{
public:
  StabilityViolation(const std::string &what, double required_dt)
    : NumericalError(what), required_dt(required_dt)
  {
  }
  double required_dt;
};

}  // namespace rmt
