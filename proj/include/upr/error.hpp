#pragma once

#include <stdexcept>
#include <string>

namespace upr {

enum class ErrorKind {
  InvalidArgument,
  Dimension,
  Numerical,
  Config,
  Io,
};

/// Single exception type for the library. The kind decides the status code
/// the C API reports and the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace upr
