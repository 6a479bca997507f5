#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace aad {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dimension or shape disagreement. Messages name expected vs. actual dims.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Invalid argument value (out of range, wrong enum, degenerate input).
class ValueError : public Error {
 public:
  explicit ValueError(const std::string& msg) : Error(msg) {}
};

/// File or serialization failure.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

namespace detail {

inline void format_into(std::ostringstream&) {}

template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& head, const Rest&... rest) {
  os << head;
  format_into(os, rest...);
}

}  // namespace detail

template <typename... Args>
std::string format_msg(const Args&... args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  return os.str();
}

template <typename... Args>
[[noreturn]] void throw_shape(const Args&... args) {
  throw ShapeError(format_msg(args...));
}

template <typename... Args>
[[noreturn]] void throw_value(const Args&... args) {
  throw ValueError(format_msg(args...));
}

template <typename... Args>
[[noreturn]] void throw_io(const Args&... args) {
  throw IoError(format_msg(args...));
}

}  // namespace aad
