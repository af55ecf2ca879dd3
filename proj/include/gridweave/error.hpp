#pragma once

#include <stdexcept>
#include <string>

namespace gridweave {

// Exception hierarchy of the C++ core. The C API maps each class onto a
// status code (see gridweave.h).

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input: scenario schema, argument ranges, profile shapes.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Numerical or coordination failure while running (infeasible MPC,
// non-converging power flow, protocol breakdown).
class RuntimeFailure : public Error {
public:
  using Error::Error;
};

} // namespace gridweave
