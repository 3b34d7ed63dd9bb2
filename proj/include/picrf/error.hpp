#pragma once

#include <stdexcept>
#include <string>

namespace picrf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A label sequence that is not valid under the requested scheme.
class LabelError : public Error {
 public:
  using Error::Error;
};

}  // namespace picrf
