#pragma once

#include <stdexcept>
#include <string>

namespace nrd {

enum class ErrorKind {
  ParameterConstraintViolated,
  NotDestabilizable,
  BaseStateUnstable,
  DegenerateCase,
  DegenerateBifurcation,
  InternalInconsistency,
  NonFiniteState,
  LengthMismatch,
  WindowTooShort,
  MismatchAt,
  Usage,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error: 1 usage, 2 analysis precondition, 3 numerical failure.
int exit_code(ErrorKind k);

}  // namespace nrd
