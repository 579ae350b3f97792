#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drbsgt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Graph is disconnected or otherwise not a valid communication topology.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// A weight rule was asked to build W on a graph it does not support.
class RuleError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

/// A check was requested outside the regime where it is defined.
class InapplicableError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double last_estimate)
      : Error(what), last_estimate_(last_estimate) {}
  double last_estimate() const { return last_estimate_; }

 private:
  double last_estimate_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Raised by an engine when an iterate stops being finite or blows past the
/// divergence guard.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration,
                  std::size_t agent)
      : Error(what), iteration_(iteration), agent_(agent) {}
  std::size_t iteration() const { return iteration_; }
  std::size_t agent() const { return agent_; }

 private:
  std::size_t iteration_;
  std::size_t agent_;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace drbsgt
