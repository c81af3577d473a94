#pragma once

#include <stdexcept>
#include <string>

namespace etkf {

// Bad user-supplied configuration or arguments (scenario files, overrides,
// graph construction). Maps to CLI exit status 3.
struct validation_error : std::runtime_error {
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at run time (singular innovation covariance, unstable
// step size). Maps to CLI exit status 4.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// File/socket trouble. Maps to CLI exit status 5.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace etkf
