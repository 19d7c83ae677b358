#pragma once

#include <stdexcept>
#include <string>

namespace dreg {

// Root of the library's exception hierarchy. Statistical failures and
// estimator non-convergence are reported through result objects, never
// thrown.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class MissingComponentLogError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace dreg
