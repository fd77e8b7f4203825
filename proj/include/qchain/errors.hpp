#pragma once

#include <stdexcept>
#include <string>

namespace qchain {

/// Operands live on different numbers of sites.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation was violated by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested size exceeds the configured dense or streaming cap.
class CapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A numerical routine failed or produced output outside its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_same_size(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": site counts differ (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace detail
}  // namespace qchain
