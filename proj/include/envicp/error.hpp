#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace envicp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input rejected before any computation (bad spec, bad flag, bad column).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, std::size_t column, const std::string& what)
      : Error(format(file, line, column, what)), file_(std::move(file)), line_(line), column_(column) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& file, std::size_t line, std::size_t column,
                            const std::string& what) {
    std::string out = file.empty() ? std::string("<input>") : file;
    if (line > 0) out += ":" + std::to_string(line);
    if (column > 0) out += ":" + std::to_string(column);
    return out + ": " + what;
  }

  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

/// A computation that cannot proceed on the given data (degenerate partition,
/// underdetermined regression, too few samples in an environment).
class ComputeError : public Error {
 public:
  using Error::Error;
};

}  // namespace envicp
