#pragma once

#include <stdexcept>
#include <string>

namespace dtrkit {

/// Malformed or inconsistent input data (bad CSV, unknown ids, invariant
/// violations). Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A factorization or statistic could not be computed (non-finite values,
/// degenerate samples, rank problems). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration. Maps to CLI exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dtrkit
