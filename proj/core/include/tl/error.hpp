#pragma once

#include <stdexcept>
#include <string>

namespace tl {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration, bad CLI usage, violated preconditions on user input.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent data (unparseable cells, domain violations).
struct DataError : Error {
  using Error::Error;
};

// Failures inside the estimation pipeline (nuisance fits, replicates).
struct EstimationError : Error {
  using Error::Error;
};

}  // namespace tl
