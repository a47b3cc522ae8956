#pragma once

#include <stdexcept>
#include <string>

namespace qfp {

// Input text could not be parsed (circuit source, JSON device files).
struct ParseError : std::runtime_error {
    int line = 0;
    int column = 0;
    ParseError(const std::string& msg, int ln = 0, int col = 0)
        : std::runtime_error(ln > 0 ? msg + " (line " + std::to_string(ln) + ", col " +
                                          std::to_string(col) + ")"
                                    : msg),
          line(ln), column(col) {}
};

// A precondition on operation inputs was violated.
struct InvalidArgument : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure (divergence, undefined metric, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qfp
