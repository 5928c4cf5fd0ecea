#pragma once

#include <stdexcept>
#include <string>

namespace gacem {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shapes of operands do not line up.
struct DimensionError : Error {
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Caller violated a precondition (empty input, non-scalar output, ...).
struct ContractError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct CapacityError : Error {
  using Error::Error;
};

// Non-finite or undefined quantity produced during training.
struct NumericError : Error {
  using Error::Error;
};

struct UnsupportedMetric : Error {
  using Error::Error;
};

}  // namespace gacem
