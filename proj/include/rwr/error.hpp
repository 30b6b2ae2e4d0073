#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rwr {

enum class ErrorKind {
  InvalidArgument,
  EmptySplit,
  EmptyDataset,
  EmptyValidation,
  EmptyScores,
  UnsupportedTask,
  KTooLarge,
  NonFiniteLoss,
  PremiseViolated,
  ParseError,
  MissingTarget,
  EmptyAfterFiltering,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyValidation: return "EmptyValidation";
    case ErrorKind::EmptyScores: return "EmptyScores";
    case ErrorKind::UnsupportedTask: return "UnsupportedTask";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::PremiseViolated: return "PremiseViolated";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingTarget: return "MissingTarget";
    case ErrorKind::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the CSV reader for structural problems; carries the 1-based
/// data row and 0-based column of the offending cell.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : Error(ErrorKind::ParseError,
              "row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace rwr
