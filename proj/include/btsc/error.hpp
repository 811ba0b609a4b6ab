#pragma once

#include <stdexcept>
#include <string>

namespace btsc {

// Numeric values double as CLI exit codes.
enum class ErrorKind : int {
  Usage = 1,
  Io = 2,
  Data = 3,
  Numerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_usage(const std::string& message);
[[noreturn]] void throw_io(const std::string& message);
[[noreturn]] void throw_data(const std::string& message);
[[noreturn]] void throw_numerical(const std::string& message);

}  // namespace btsc
