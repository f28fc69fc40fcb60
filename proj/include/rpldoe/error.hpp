#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rpldoe {

enum class ErrorKind {
  kInvalidInput,
  kInvalidDesign,
  kNoFeasibleArray,
  kDomain,
  kDegenerateVariance,
  kInconsistentDecomposition,
  kUndefinedContribution,
  kNoErrorDf,
  kZeroVariance,
  kUnknownFactor,
  kRange,
  kConfiguration,
  kAccounting,
  kParse,
  kIo,
  kInvariant,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kInvalidDesign: return "invalid design";
    case ErrorKind::kNoFeasibleArray: return "no feasible array";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kDegenerateVariance: return "degenerate variance";
    case ErrorKind::kInconsistentDecomposition: return "inconsistent decomposition";
    case ErrorKind::kUndefinedContribution: return "undefined contribution";
    case ErrorKind::kNoErrorDf: return "no error degrees of freedom";
    case ErrorKind::kZeroVariance: return "zero variance";
    case ErrorKind::kUnknownFactor: return "unknown factor";
    case ErrorKind::kRange: return "range error";
    case ErrorKind::kConfiguration: return "configuration error";
    case ErrorKind::kAccounting: return "accounting error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kInvariant: return "invariant violated";
  }
  return "error";
}

/// Every failure raised by the library carries a kind so callers can branch
/// on it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rpldoe
