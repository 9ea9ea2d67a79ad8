#pragma once

#include <stdexcept>
#include <string>

namespace cgq {

// Invalid user-supplied parameters (orders, mesh sizes, config keys).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed or non-finite input data.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A physical admissibility check failed (e.g. negative potential).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Factorization, diagonalization or iteration failure.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace cgq
