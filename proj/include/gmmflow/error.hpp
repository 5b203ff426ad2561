// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gmmflow {

enum class ErrorKind {
  kInvalidArgument,  // bad configuration or precondition violation
  kNumerical,        // non-finite state, non-convergence
  kIo,               // file cannot be opened, read or written
  kFormat,           // malformed or truncated file contents
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::kInvalidArgument, what);
}

}  // namespace gmmflow
