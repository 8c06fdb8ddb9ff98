#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace covshift {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  Unsupported,
  UnsupportedPair,
  SingularDesign,
  SingularSource,
  DegenerateWeights,
  SpectralFailure,
  DeltaOutOfRange,
  InsufficientGrid,
  ConfigError,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* where) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(where) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace covshift
