#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoground {

// Every failure the engine can report. The service maps each value to
// exactly one stable API code (see service.hpp).
enum class ErrorCode {
  InvalidArgument,
  DegenerateBearing,
  LatitudeOutOfProjection,
  PixelOutOfWorld,
  MalformedGeoJson,
  UnsupportedGeometry,
  ViewportOutOfProjection,
  UnknownRegion,
  UnparsableQuery,
  UnknownCategory,
  AnchorNotFound,
  NoCandidates,
  DimensionMismatch,
  EmptyDataset,
  EmptyRelevantSet,
  MalformedModel,
  StepBudgetExceeded,
  MalformedToolCall,
  ToolError,
  Unreachable,
  IncomparablePaths,
  InsufficientPois,
  MalformedWorld,
  MalformedScene,
  SessionNotFound,
  NoActiveDestination,
  Unauthorized,
  RouteNotFound,
};

inline constexpr ErrorCode kLastErrorCode = ErrorCode::RouteNotFound;

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DegenerateBearing: return "degenerate_bearing";
    case ErrorCode::LatitudeOutOfProjection: return "latitude_out_of_projection";
    case ErrorCode::PixelOutOfWorld: return "pixel_out_of_world";
    case ErrorCode::MalformedGeoJson: return "malformed_geojson";
    case ErrorCode::UnsupportedGeometry: return "unsupported_geometry";
    case ErrorCode::ViewportOutOfProjection: return "viewport_out_of_projection";
    case ErrorCode::UnknownRegion: return "unknown_region";
    case ErrorCode::UnparsableQuery: return "unparsable_query";
    case ErrorCode::UnknownCategory: return "unknown_category";
    case ErrorCode::AnchorNotFound: return "anchor_not_found";
    case ErrorCode::NoCandidates: return "no_candidates";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::EmptyRelevantSet: return "empty_relevant_set";
    case ErrorCode::MalformedModel: return "malformed_model";
    case ErrorCode::StepBudgetExceeded: return "step_budget_exceeded";
    case ErrorCode::MalformedToolCall: return "malformed_tool_call";
    case ErrorCode::ToolError: return "tool_error";
    case ErrorCode::Unreachable: return "unreachable";
    case ErrorCode::IncomparablePaths: return "incomparable_paths";
    case ErrorCode::InsufficientPois: return "insufficient_pois";
    case ErrorCode::MalformedWorld: return "malformed_world";
    case ErrorCode::MalformedScene: return "malformed_scene";
    case ErrorCode::SessionNotFound: return "session_not_found";
    case ErrorCode::NoActiveDestination: return "no_active_destination";
    case ErrorCode::Unauthorized: return "unauthorized";
    case ErrorCode::RouteNotFound: return "route_not_found";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace geoground
