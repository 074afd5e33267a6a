#pragma once

#include <stdexcept>
#include <string>

namespace aqcast {

/// Malformed or inconsistent input data (CSV content, panel shape, configuration).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical invariant failed: non-finite values, non-PD precision matrices.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aqcast
