#pragma once

#include <stdexcept>
#include <string>

namespace crossed {

// A requested design cannot be realized (e.g. inclusion probability too small
// to cover every level, or a degree sequence with no simple realization).
struct InfeasibleDesign : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric Cholesky hit a non-positive pivot; `column` is the index of the
// offending column in the original (unpermuted) numbering.
struct NotPositiveDefinite : std::runtime_error {
  int column;
  NotPositiveDefinite(int column_, const std::string& msg)
      : std::runtime_error(msg), column(column_) {}
};

// A preconditioner factor came out singular (zero pivot even after the
// absolute-value fixup, or a non-positive diagonal during scaling).
struct SingularPreconditioner : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iteration produced a non-finite quantity.
struct NumericBreakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; `line` is 1-based.
struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

// A problem size exceeded a deliberate desk-scale cap and no override was given.
struct CapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace crossed
