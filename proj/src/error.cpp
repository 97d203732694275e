#include "pinchlab/error.hpp"

namespace pinchlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSurface: return "InvalidSurface";
    case ErrorCode::MeshDegenerate: return "MeshDegenerate";
    case ErrorCode::NotMeanConvex: return "NotMeanConvex";
    case ErrorCode::ResampleTooCoarse: return "ResampleTooCoarse";
    case ErrorCode::ResolutionTooLow: return "ResolutionTooLow";
    case ErrorCode::CflViolation: return "CFLViolation";
    case ErrorCode::SelfIntersection: return "SelfIntersection";
    case ErrorCode::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorCode::ExtinctionPassed: return "ExtinctionPassed";
    case ErrorCode::NoSamples: return "NoSamples";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::NoAnalyticOracle: return "NoAnalyticOracle";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace pinchlab
