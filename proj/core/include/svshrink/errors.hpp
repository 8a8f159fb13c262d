#pragma once

#include <stdexcept>
#include <string>

namespace svshrink {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Model or algorithm parameter out of its admissible range.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Operation requested for a noise family that does not support it.
class UnsupportedFamilyError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Two singular values too close for the spectral derivative formulas.
class DegeneracyError : public std::runtime_error {
public:
  DegeneracyError(std::size_t k, std::size_t l, const std::string &what)
      : std::runtime_error(what), first(k), second(l) {}
  std::size_t first;
  std::size_t second;
};

/// Decomposition or solver failure.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Problem size exceeds a configured guard.
class CapacityError : public std::length_error {
public:
  using std::length_error::length_error;
};

/// Shape mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Schema violation in a JSON document; the message starts with the JSON
/// pointer of the offending value.
class ConfigError : public ParameterError {
public:
  using ParameterError::ParameterError;
};

} // namespace svshrink
