#pragma once

#include <stdexcept>
#include <string>

namespace pixembed {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents that are empty, zero, or incompatible with an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value outside the domain an operation accepts (labels, hyperparameters).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Embedding index outside the table. Unreachable after quantizer clamping.
class OutOfVocabularyError : public Error {
 public:
  using Error::Error;
};

// Data-side failures. The CLI maps all of these to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class LengthError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateDataError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace pixembed
