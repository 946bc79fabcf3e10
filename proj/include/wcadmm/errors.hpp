#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wcadmm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a domain invariant (non-finite coordinate, negative
/// weight, marginal mismatch, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside its admissible range (epsilon <= 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap. `residual` is the last
/// convergence measure the solver computed.
class IterationLimitError : public Error {
 public:
  IterationLimitError(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Floating-point breakdown that stabilization could not recover from.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A functional composition or run mode the solvers do not support.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Inner barycenter solve reported convergence but the agent gradients
/// disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised while working on behalf of one agent.
class AgentError : public Error {
 public:
  AgentError(std::size_t agent, const std::string& what)
      : Error("agent " + std::to_string(agent) + ": " + what), agent_(agent) {}
  std::size_t agent() const { return agent_; }

 private:
  std::size_t agent_;
};

/// Configuration text rejected by the parser.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Transport or protocol failure in the distributed runtime.
class RuntimeFault : public Error {
 public:
  using Error::Error;
};

}  // namespace wcadmm
