#pragma once

#include <stdexcept>
#include <string>

namespace camsim {

/// Base class for every error this library reports. Parsers and validators
/// never crash on bad input; they throw one of the subclasses below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax or schema error in a text input, annotated with its position.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int col = 0)
      : Error(format(msg, line, col)), line_(line), col_(col) {}

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  static std::string format(const std::string& msg, int line, int col) {
    std::string s = "line " + std::to_string(line);
    if (col > 0) s += ", col " + std::to_string(col);
    return s + ": " + msg;
  }
  int line_ = 0;
  int col_ = 0;
};

/// Structurally valid input that violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File system or container-format failure (truncation, bad magic, ...).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Two spectra (or an image and a spectrum) live on different wavelength
/// grids; the caller must resample before combining them.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace camsim
