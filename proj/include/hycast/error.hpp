#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hycast {

// Base error carrying a stable category tag. The CLI maps categories to exit
// codes; tests assert on them.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

// Shape or extent mismatch between tensors, layers, or stages.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message)
      : Error("dimension", message) {}
};

// Violated call contract: bad argument, invalid state, unmet precondition.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message)
      : Error("contract", message) {}
};

// Invalid or inconsistent configuration value.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("config", message) {}
};

// Input data problems: missing files, parse failures, validation failures.
// Subcategories refine the tag, e.g. "data/file-not-found", "data/parse".
class DataError : public Error {
 public:
  explicit DataError(const std::string& message, std::string category = "data")
      : Error(std::move(category), message) {}
};

// Mathematically undefined request (division by zero denominators, R^2 of a
// constant series, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message)
      : Error("domain", message) {}
};

// Training failed (divergence, non-finite loss).
class TrainError : public Error {
 public:
  explicit TrainError(const std::string& message) : Error("train", message) {}
};

// Serialization / checkpoint container problems.
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace hycast
