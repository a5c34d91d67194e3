#pragma once

#include <stdexcept>
#include <string>

namespace podscale {

// Invalid configuration, scenario or checkpoint input. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A workload slice or event referencing a service that is not active.
class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation on an unknown, duplicate or inactive service, or an infeasible
// capacity request.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf detected in a network, gradient, reward or simulator value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace podscale
