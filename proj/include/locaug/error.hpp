#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace locaug {

enum class ErrorKind {
  shape_mismatch,
  bad_format,
  invalid_argument,
  divergence,
  io,
};

std::string_view to_string(ErrorKind kind);

// Every failure the library reports carries a kind so the CLI can print a
// single machine-parseable line: "error kind=<kind> message=<what>".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace locaug
