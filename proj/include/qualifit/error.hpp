#pragma once

#include <stdexcept>
#include <string>

namespace qualifit {

// Bad run setup: missing/mismatched config entries, unknown observables,
// windows outside the simulated range.  CLI maps this to exit code 1.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (constraint text, CSV rows).  Exit code 2.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lexical or syntax error in constraint text; carries the source location.
class parse_error : public data_error {
 public:
  parse_error(const std::string& msg, int line, int column)
      : data_error("line " + std::to_string(line) + ", column " +
                   std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace qualifit
