#pragma once

#include <stdexcept>
#include <string>

namespace openext {

/// Malformed or inconsistent input: shapes, Hermiticity, file contents.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold for the input.
class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A point measure has an atom that is not positive semidefinite.
class DissipationError : public ValidationError {
 public:
  DissipationError(const std::string& what, std::size_t atom, double min_eigenvalue)
      : ValidationError(what), atom_(atom), min_eigenvalue_(min_eigenvalue) {}

  std::size_t atom() const noexcept { return atom_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  std::size_t atom_;
  double min_eigenvalue_;
};

/// Instantaneous (delta-function) friction was supplied.
class UnsupportedError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A numerical routine failed to converge or produced an unusable result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace openext
