#pragma once

#include <stdexcept>
#include <string>

namespace risel {

/// Caller broke a documented precondition (shape mismatch, non-Hermitian input, bad index).
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Value outside the mathematical domain of a function (e.g. non-positive sample count).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine could not deliver its accuracy contract.
class numerical_error : public std::runtime_error {
 public:
  numerical_error(const std::string& what, double condition = 0.0)
      : std::runtime_error(what), condition_(condition) {}

  /// Condition estimate of the offending system, 0 when not applicable.
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

class insufficient_data_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-range configuration document.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace risel
