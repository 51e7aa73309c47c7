#pragma once

#include <stdexcept>
#include <string>

namespace hwbo {

enum class ErrorCategory {
  Domain,  // bad arguments to a library call
  Config,
  Data,
  Model,
  Fit,
};

/// Process exit code used by the CLI for each category.
inline int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Model: return 4;
    case ErrorCategory::Fit: return 5;
    case ErrorCategory::Domain: return 6;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::Domain, what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorCategory::Config, field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorCategory::Model, what) {}
};

/// Raised when a numerical fit (Cholesky, least squares) cannot be completed.
class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error(ErrorCategory::Fit, what) {}
};

}  // namespace hwbo
