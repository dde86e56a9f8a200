#pragma once
/** @file error.hpp
 *  Exception hierarchy shared by every heatflow module.
 */

#include <cstddef>
#include <stdexcept>
#include <string>

namespace heatflow {

enum class ErrorKind {
  parameter,
  resolution,
  domain,
  absolute_continuity,
  numeric,
  dependency,
  search_range,
  usage,
  syntax,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure in the distribution-spec grammar; position is a byte offset.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& message)
      : Error(ErrorKind::syntax,
              message + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace heatflow
