#pragma once

#include <stdexcept>
#include <string>

namespace sscvox {

// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
  kUsage = 1,       // bad arguments or preconditions violated by the caller
  kIo = 2,          // file missing, unreadable, unwritable
  kValidation = 3,  // malformed file contents or data failing an invariant
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

}  // namespace sscvox
