#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deepgen {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes:
// config/usage problems -> 2, malformed input data -> 3, NaN/Inf -> 4.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor / parameter shapes do not conform.
class dimension_error : public error {
 public:
  using error::error;
};

// Invalid configuration value or precondition violation.
class config_error : public error {
 public:
  using error::error;
};

// Operation called in the wrong order (e.g. backward before forward).
class state_error : public error {
 public:
  using error::error;
};

// Non-finite value produced or encountered.
class numeric_error : public error {
 public:
  using error::error;
};

// File could not be opened / read / written.
class io_error : public error {
 public:
  using error::error;
};

// Sample accession has no entry in the label map, or a class is absent.
class label_error : public error {
 public:
  using error::error;
};

// Requested train/test split cannot be satisfied.
class split_error : public error {
 public:
  using error::error;
};

// Structural problem in an input file; carries the 1-based line number.
class format_error : public error {
 public:
  format_error(const std::string& msg, std::size_t line)
      : error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Unparseable cell in a numeric table; carries 1-based (row, col) within the table body.
class parse_error : public error {
 public:
  parse_error(const std::string& msg, std::size_t row, std::size_t col)
      : error(msg + " (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace deepgen
