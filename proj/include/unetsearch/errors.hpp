#pragma once

#include <stdexcept>
#include <string>

namespace unetsearch {

/// Invalid configuration values (search space, GA hyperparameters, CLI flags).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed genome text or IR/record documents.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An architecture failed validation where a valid one was required.
class InvalidArchitecture : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Worker violated the fitness wire protocol.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One or more individuals could not be evaluated; the generation is aborted.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Run directory or run log is missing, inconsistent or corrupted.
class RunLogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unetsearch
