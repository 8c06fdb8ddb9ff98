#include "covshift/types.hpp"

namespace covshift {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::UnsupportedPair: return "UnsupportedPair";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::SingularSource: return "SingularSource";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::SpectralFailure: return "SpectralFailure";
    case ErrorCode::DeltaOutOfRange: return "DeltaOutOfRange";
    case ErrorCode::InsufficientGrid: return "InsufficientGrid";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace covshift
