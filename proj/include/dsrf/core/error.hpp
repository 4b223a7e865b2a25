#pragma once

#include <stdexcept>
#include <string>

namespace dsrf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed something that violates an operation's preconditions.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A model (homography, kernel, ...) could not be fitted to the data.
class EstimationFailure : public Error {
 public:
  using Error::Error;
};

class PointAtInfinity : public Error {
 public:
  using Error::Error;
};

class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

}  // namespace dsrf
