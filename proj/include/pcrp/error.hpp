#pragma once

#include <stdexcept>
#include <string>

namespace pcrp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or invalid configuration (hyperparameters, grids, rasters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or out-of-range input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Parameter values outside the model's support.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcrp
