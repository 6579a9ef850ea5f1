#pragma once

#include <stdexcept>
#include <string>

namespace gfpeel {

// Argument outside the mathematical domain of an operation (poles, bad ranges).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A numerical routine could not reach its tolerance. Carries the best estimate.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double partial, double error_estimate)
      : std::runtime_error(what), partial_(partial), error_(error_estimate) {}
  double partial() const noexcept { return partial_; }
  double error_estimate() const noexcept { return error_; }

 private:
  double partial_;
  double error_;
};

// A simulation would exceed a hard resource cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lookup outside a precomputed table.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Internal bookkeeping went wrong (violated invariant).
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed configuration or serialized document; `field` names the offending key.
class SchemaError : public std::invalid_argument {
 public:
  SchemaError(const std::string& field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace gfpeel
