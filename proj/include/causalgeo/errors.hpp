#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace causalgeo {

// Geometric and numeric failures carry a kind so callers can map them to
// exit codes or retry policies without string matching.
enum class ErrorKind {
  IndexOutOfRange,
  DomainError,
  TangentiallyDegenerate,
  SignatureMismatch,
  ChartExit,
  StepSizeUnderflow,
  ConjugatePoint,
  DegenerateMetric,
  NoRealRoot,
  BranchAmbiguity,
  SingularMatrix,
  UnboundVariable,
  BadInput,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Lexer/parser failure with a byte offset into the source text.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t pos, const std::string& msg)
      : std::runtime_error(msg + " (offset " + std::to_string(pos) + ")"),
        pos_(pos) {}
  std::size_t pos() const { return pos_; }

 private:
  std::size_t pos_;
};

const char* error_kind_name(ErrorKind k);

}  // namespace causalgeo
