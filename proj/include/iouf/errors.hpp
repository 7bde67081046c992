#pragma once

#include <stdexcept>
#include <string>

namespace iouf {

// Raised when a correlation model or its derived quantities are invalid.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a simulation or quadrature cannot produce a trustworthy number
// (failed factorization, non-finite state, quadrature non-convergence, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace iouf
