#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctx {

enum class ErrorKind {
  InvalidArgument,
  ParseError,
  ValidationError,
  SumNotOne,
  NegativeMass,
  UnknownAtom,
  DuplicateAtom,
  UnknownAxis,
  AxisCollision,
  CombinatorialBudgetExceeded,
  AtomSpaceTooLarge,
  NotBijective,
  InconsistentConnection,
  FrechetViolation,
  EmptyStream,
  NonNumeric,
  LengthMismatch,
  DivisionByZero,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::SumNotOne: return "SumNotOne";
    case ErrorKind::NegativeMass: return "NegativeMass";
    case ErrorKind::UnknownAtom: return "UnknownAtom";
    case ErrorKind::DuplicateAtom: return "DuplicateAtom";
    case ErrorKind::UnknownAxis: return "UnknownAxis";
    case ErrorKind::AxisCollision: return "AxisCollision";
    case ErrorKind::CombinatorialBudgetExceeded: return "CombinatorialBudgetExceeded";
    case ErrorKind::AtomSpaceTooLarge: return "AtomSpaceTooLarge";
    case ErrorKind::NotBijective: return "NotBijective";
    case ErrorKind::InconsistentConnection: return "InconsistentConnection";
    case ErrorKind::FrechetViolation: return "FrechetViolation";
    case ErrorKind::EmptyStream: return "EmptyStream";
    case ErrorKind::NonNumeric: return "NonNumeric";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace ctx
