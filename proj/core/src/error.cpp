#include "implicit/error.hpp"

#include <utility>

namespace implicit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::VariableIndex: return "VariableIndexOutOfRange";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::SingularMinor: return "SingularMinor";
    case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorKind::EmptyMargin: return "EmptyMargin";
    case ErrorKind::DomainEscape: return "DomainEscape";
    case ErrorKind::GridTooSmall: return "GridTooSmall";
    case ErrorKind::WrongMode: return "WrongMode";
    case ErrorKind::DegenerateSeed: return "DegenerateSeed";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ZeroLambda: return "ZeroLambda";
    case ErrorKind::WrongBaseMode: return "WrongBaseMode";
    case ErrorKind::EmptyCloud: return "EmptyCloud";
    case ErrorKind::NotCritical: return "NotCritical";
    case ErrorKind::NoRegularPoints: return "NoRegularPoints";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

SyntaxError::SyntaxError(ErrorKind kind, std::size_t offset, const std::string& message)
    : Error(kind, message + " at offset " + std::to_string(offset)), offset_(offset) {}

ChainError::ChainError(ErrorKind kind, const std::string& message, std::vector<double> point,
                       std::vector<double> params)
    : Error(kind, message), point_(std::move(point)), params_(std::move(params)) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace implicit
