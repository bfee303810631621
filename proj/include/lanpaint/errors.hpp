#pragma once

#include <stdexcept>
#include <string>

namespace lanpaint {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric argument lies outside its documented domain.
class InvalidRange : public Error {
 public:
  using Error::Error;
};

// A covariance-like matrix has a pivot below -1e-10 during factorisation.
class NotPSD : public Error {
 public:
  using Error::Error;
};

// A matrix that must be inverted is singular.
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

// A formula that needs t > 0 (or finite noise) was evaluated at a limit.
class DegenerateTime : public Error {
 public:
  using Error::Error;
};

// Too few samples, or samples whose fitted covariance is singular.
class DegenerateSamples : public Error {
 public:
  using Error::Error;
};

// Invalid sampler or benchmark configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lanpaint
