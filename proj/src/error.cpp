#include "mvbev/error.hpp"

namespace mvbev {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DepthNonPositive: return "DepthNonPositive";
    case ErrorCode::RayParallelToPlane: return "RayParallelToPlane";
    case ErrorCode::IntersectionBehindCamera: return "IntersectionBehindCamera";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonPositiveSize: return "NonPositiveSize";
    case ErrorCode::BadBinCount: return "BadBinCount";
    case ErrorCode::MalformedDistribution: return "MalformedDistribution";
    case ErrorCode::DegenerateRay: return "DegenerateRay";
    case ErrorCode::AllVerticesBehindCamera: return "AllVerticesBehindCamera";
    case ErrorCode::EmptyROI: return "EmptyROI";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::NoPositivesWithOffsets: return "NoPositivesWithOffsets";
    case ErrorCode::PlacementInfeasible: return "PlacementInfeasible";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace mvbev
