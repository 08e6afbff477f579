#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dmdkit {

/// Broad error classes; the CLI maps each one to a distinct exit status.
enum class ErrorCategory {
  Config,     // invalid options or contradictory settings
  Data,       // malformed or invalid input data
  Numerical,  // the numerics failed on otherwise valid input
};

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string name, ErrorCategory category, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)), category_(category) {}

  /// Stable machine-readable class name, e.g. "NonUniformTimeError".
  const std::string& name() const noexcept { return name_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  std::string name_;
  ErrorCategory category_;
};

#define DMDKIT_DEFINE_ERROR(Type, Category)                                   \
  class Type : public Error {                                                 \
   public:                                                                    \
    explicit Type(const std::string& what)                                    \
        : Error(#Type, ErrorCategory::Category, what) {}                      \
  }

DMDKIT_DEFINE_ERROR(ConfigError, Config);
DMDKIT_DEFINE_ERROR(FormatError, Data);
DMDKIT_DEFINE_ERROR(ValidationError, Data);
DMDKIT_DEFINE_ERROR(ShapeError, Data);
DMDKIT_DEFINE_ERROR(NonUniformTimeError, Data);
DMDKIT_DEFINE_ERROR(DegenerateDataError, Data);
DMDKIT_DEFINE_ERROR(IoError, Data);
DMDKIT_DEFINE_ERROR(SingularEigenvalueError, Numerical);
DMDKIT_DEFINE_ERROR(NumericalError, Numerical);

#undef DMDKIT_DEFINE_ERROR

/// Non-numeric CSV cell. Row and column are zero-based data indices.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& what)
      : Error("ParseError", ErrorCategory::Data, what), row_(row), col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

/// Every bagging trial diverged. Carries one diagnostic line per trial.
class BaggingFailedError : public Error {
 public:
  BaggingFailedError(const std::string& what, std::vector<std::string> trials)
      : Error("BaggingFailedError", ErrorCategory::Numerical, what),
        trials_(std::move(trials)) {}

  const std::vector<std::string>& trial_diagnostics() const noexcept {
    return trials_;
  }

 private:
  std::vector<std::string> trials_;
};

enum class WarningKind {
  RankDeficiency,
  IllConditionedBasis,
  Stall,
  SingularEigenvalue,
  SelectionClamped,
};

std::string_view warning_name(WarningKind kind) noexcept;

struct Warning {
  WarningKind kind;
  std::string message;
};

/// Collects non-fatal conditions raised during a computation. Functions take
/// an optional pointer; passing nullptr discards warnings.
class WarningLog {
 public:
  void add(WarningKind kind, std::string message) {
    entries_.push_back({kind, std::move(message)});
  }
  void append(const WarningLog& other) {
    entries_.insert(entries_.end(), other.entries_.begin(),
                    other.entries_.end());
  }
  bool contains(WarningKind kind) const noexcept {
    for (const auto& w : entries_) {
      if (w.kind == kind) return true;
    }
    return false;
  }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Warning>& entries() const noexcept { return entries_; }

 private:
  std::vector<Warning> entries_;
};

inline void warn(WarningLog* log, WarningKind kind, std::string message) {
  if (log != nullptr) log->add(kind, std::move(message));
}

}  // namespace dmdkit
