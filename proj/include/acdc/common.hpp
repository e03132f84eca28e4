#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acdc {

/// N x D observation matrix, one observation per row.
using DataMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cluster ids; any integer values are allowed.
using LabelVector = std::vector<int>;

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  LengthMismatch,
  EmptyInput,
  EmptySample,
  ZeroModelMass,
  TooFewSamples,
  DegenerateRadius,
  NotSPD,
  DegenerateComponent,
  NonInteger,
  NegativeValue,
  ZeroVariance,
  ZeroVector,
  ZeroTruthMean,
  MissingCounts,
  TooFewPoints,
  EmptyCalibrationSet,
  IncompatibleDims,
  Io,
  Parse,
};

/// Broad class of an error, used to pick CLI exit codes.
enum class ErrorKind { Usage, Data, Numerical };

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::LengthMismatch: return "LengthMismatch";
  case ErrorCode::EmptyInput: return "EmptyInput";
  case ErrorCode::EmptySample: return "EmptySample";
  case ErrorCode::ZeroModelMass: return "ZeroModelMass";
  case ErrorCode::TooFewSamples: return "TooFewSamples";
  case ErrorCode::DegenerateRadius: return "DegenerateRadius";
  case ErrorCode::NotSPD: return "NotSPD";
  case ErrorCode::DegenerateComponent: return "DegenerateComponent";
  case ErrorCode::NonInteger: return "NonInteger";
  case ErrorCode::NegativeValue: return "NegativeValue";
  case ErrorCode::ZeroVariance: return "ZeroVariance";
  case ErrorCode::ZeroVector: return "ZeroVector";
  case ErrorCode::ZeroTruthMean: return "ZeroTruthMean";
  case ErrorCode::MissingCounts: return "MissingCounts";
  case ErrorCode::TooFewPoints: return "TooFewPoints";
  case ErrorCode::EmptyCalibrationSet: return "EmptyCalibrationSet";
  case ErrorCode::IncompatibleDims: return "IncompatibleDims";
  case ErrorCode::Io: return "Io";
  case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

[[nodiscard]] constexpr ErrorKind kind_of(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::InvalidArgument:
  case ErrorCode::MissingCounts:
  case ErrorCode::EmptyCalibrationSet:
    return ErrorKind::Usage;
  case ErrorCode::NotSPD:
  case ErrorCode::DegenerateRadius:
  case ErrorCode::DegenerateComponent:
  case ErrorCode::ZeroVariance:
    return ErrorKind::Numerical;
  default:
    return ErrorKind::Data;
  }
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_of(code_); }

private:
  ErrorCode code_;
};

/// Rethrows the active acdc::Error with extra context prepended, keeping its code.
[[noreturn]] void rethrow_with_context(const Error &err,
                                       const std::string &context);

inline void require(bool cond, ErrorCode code, const std::string &msg) {
  if (!cond)
    throw Error(code, msg);
}

} // namespace acdc
