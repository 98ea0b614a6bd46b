#pragma once

#include <stdexcept>
#include <string>

namespace castkit {

// Base of every error raised by the library. The CLI maps `DataError`
// subclasses to exit code 3 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class ConsistencyError : public DataError {
 public:
  using DataError::DataError;
};

class IngestError : public DataError {
 public:
  using DataError::DataError;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateCenterError : public DataError {
 public:
  using DataError::DataError;
};

class ProtocolError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientPairsError : public DataError {
 public:
  using DataError::DataError;
};

class UndefinedMetricError : public DataError {
 public:
  using DataError::DataError;
};

class GenerationError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

class MatcherError : public Error {
 public:
  using Error::Error;
};

// An input file is missing or unreadable.
class InputError : public DataError {
 public:
  using DataError::DataError;
};

// Output could not be written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace castkit
