// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace khan {

enum class ErrorCode {
  DimMismatch,
  ShapeMismatch,
  InvalidArgument,
  NonConvergence,
  CacheMismatch,
  MissingFile,
  MalformedData,
  CrossGraphEdge,
  SchemeUnavailable,
  DegenerateInput,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace khan
