#include "nrd/errors.hpp"

namespace nrd {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ParameterConstraintViolated: return "ParameterConstraintViolated";
    case ErrorKind::NotDestabilizable: return "NotDestabilizable";
    case ErrorKind::BaseStateUnstable: return "BaseStateUnstable";
    case ErrorKind::DegenerateCase: return "DegenerateCase";
    case ErrorKind::DegenerateBifurcation: return "DegenerateBifurcation";
    case ErrorKind::InternalInconsistency: return "InternalInconsistency";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::MismatchAt: return "MismatchAt";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage:
    case ErrorKind::LengthMismatch:
      return 1;
    case ErrorKind::ParameterConstraintViolated:
    case ErrorKind::NotDestabilizable:
    case ErrorKind::BaseStateUnstable:
    case ErrorKind::DegenerateCase:
    case ErrorKind::DegenerateBifurcation:
      return 2;
    default:
      return 3;
  }
}

}  // namespace nrd
