#pragma once

#include <stdexcept>
#include <string>

namespace dqpt {

// Invalid argument or precondition (negative x, n_modes = 0, non-uniform grid, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Evaluation would leave the representable range (complex-time overflow guard, ...).
class RangeError : public std::range_error {
 public:
  explicit RangeError(const std::string& what) : std::range_error(what) {}
};

// A bracketing or bookkeeping assumption failed. Indicates a bug, never user input.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

// Malformed or missing configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Unwritable output or unreadable data file.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dqpt
