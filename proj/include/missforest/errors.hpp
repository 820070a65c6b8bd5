#pragma once

#include <stdexcept>
#include <string>

namespace missforest {

// Base class so callers can distinguish library failures from std errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- graph construction / queries ----
struct CycleDetected : Error {
  using Error::Error;
};
struct EdgeIntoVariable : Error {
  using Error::Error;
};
struct UnknownNode : Error {
  using Error::Error;
};
struct DuplicateEdge : Error {
  using Error::Error;
};

// ---- numerics ----
struct SingularJacobian : Error {
  using Error::Error;
};
struct NonFiniteEvaluation : Error {
  using Error::Error;
};
struct SingularA : Error {
  using Error::Error;
};

// ---- estimation ----
struct NonConvergence : Error {
  using Error::Error;
};
struct Separation : Error {
  using Error::Error;
};
struct InsufficientRows : Error {
  using Error::Error;
};
struct NotIdentifiedFunctional : Error {
  NotIdentifiedFunctional(const std::string& msg, int offender_ind)
      : Error(msg), offender(offender_ind) {}
  int offender;  // indicator index blocking identification
};
struct DegenerateWeights : Error {
  using Error::Error;
};
struct FitMissing : Error {
  using Error::Error;
};
struct NonPositivePropensity : Error {
  using Error::Error;
};
struct MissingParentValue : Error {
  using Error::Error;
};

// ---- parsing / io ----
struct ParseError : Error {
  ParseError(const std::string& msg, int line_no, int col_no = 0)
      : Error(msg), line(line_no), col(col_no) {}
  int line;
  int col;
};
struct SyntaxError : ParseError {
  using ParseError::ParseError;
};
struct SemanticError : ParseError {
  using ParseError::ParseError;
};
struct HeaderMismatch : Error {
  using Error::Error;
};
struct UnparsableCell : Error {
  UnparsableCell(const std::string& msg, int row_no, int col_no)
      : Error(msg), row(row_no), col(col_no) {}
  int row;
  int col;
};
struct EmptyFile : Error {
  using Error::Error;
};

}  // namespace missforest
