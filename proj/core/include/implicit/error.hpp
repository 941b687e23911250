#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace implicit {

/// Every failure raised by the library carries one of these kinds; the CLI
/// prints the kind name on stderr and maps it to an exit code.
enum class ErrorKind {
  Syntax,
  UnknownIdentifier,
  VariableIndex,
  Domain,
  InvalidArgument,
  RankDeficient,
  SingularMinor,
  UnsupportedDimension,
  EmptyMargin,
  DomainEscape,
  GridTooSmall,
  WrongMode,
  DegenerateSeed,
  ShapeMismatch,
  ZeroLambda,
  WrongBaseMode,
  EmptyCloud,
  NotCritical,
  NoRegularPoints,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

/// Parse failure with the byte offset into the source text.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorKind kind, std::size_t offset, const std::string& message);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Failure while integrating a chain: the offending point and the parameter
/// values (t_1, ..., t_{d-l}) of the node being produced.
class ChainError : public Error {
 public:
  ChainError(ErrorKind kind, const std::string& message, std::vector<double> point,
             std::vector<double> params);

  const std::vector<double>& point() const noexcept { return point_; }
  const std::vector<double>& params() const noexcept { return params_; }

 private:
  std::vector<double> point_;
  std::vector<double> params_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace implicit
