#pragma once

#include <stdexcept>
#include <string>

namespace qoip {

enum class ErrorCode {
  InvalidArgument,
  UnsupportedDegree,
  NumericalFailure,
  UndefinedPairing,
  SingularSystem,
  IndefiniteMatrix,
  DegenerateDenominator,
  ParseError,
  NonconformingMesh,
};

/// Library-wide exception carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace qoip
