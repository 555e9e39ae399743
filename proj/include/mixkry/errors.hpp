#pragma once

#include <stdexcept>
#include <string>

namespace mixkry {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A kernel or model parameter lies outside its admissible domain.
class ParameterDomainError : public Error {
 public:
  using Error::Error;
};

/// Dense storage would exceed the configured size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Malformed arguments: dimension mismatch, empty input and similar.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DefinitenessError : public Error {
 public:
  using Error::Error;
};

/// The data carry no information (zero right-hand side, zero signal).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Parameter search produced no finite objective value.
class SearchFailure : public Error {
 public:
  using Error::Error;
};

class FitFailure : public Error {
 public:
  using Error::Error;
};

/// The Krylov process broke down before producing a single iterate.
class BreakdownError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mixkry
