#pragma once

#include <stdexcept>
#include <string>

namespace gpss {

// Argument outside its domain (non-positive variance, bad overlap fraction, ...).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Vector/matrix sizes inconsistent with the operation.
class InputSizeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Signal cannot seed an estimate (all zeros, zero variance at lag 0).
class DegenerateSignalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Cholesky factorization failed even at the maximum jitter level.
class ConditioningError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File or stream problem (unreadable WAV, malformed JSON, ...).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace gpss
