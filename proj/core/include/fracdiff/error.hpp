#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracdiff {

enum class ErrorKind {
  InvalidParameter,
  InvalidInput,
  InvalidSpec,
  DomainError,
  UnsupportedDimension,
  SubcriticalError,
  UnsupportedRegime,
  StepFailure,
  Inconclusive,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` distinguishes the
/// failure classes callers are expected to branch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

}  // namespace fracdiff
