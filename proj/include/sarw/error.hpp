#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sarw {

enum class ErrorCode {
  UnknownFrame,
  InconsistentEdge,
  EmptyMesh,
  DegenerateTarget,
  SchemaError,
  PlacementCollision,
  UnreachableGoal,
  UnknownHologram,
  CarriedHologram,
  AgentBusy,
  HologramUnavailable,
  NotCarrying,
  TargetOccupied,
  Unreachable,
  StartOccupied,
  GoalOccupied,
  CorruptLog,
  MalformedFrame,
  VersionMismatch,
  UnknownMessageType,
  EndpointBusy,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownFrame: return "UnknownFrame";
    case ErrorCode::InconsistentEdge: return "InconsistentEdge";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::PlacementCollision: return "PlacementCollision";
    case ErrorCode::UnreachableGoal: return "UnreachableGoal";
    case ErrorCode::UnknownHologram: return "UnknownHologram";
    case ErrorCode::CarriedHologram: return "CarriedHologram";
    case ErrorCode::AgentBusy: return "AgentBusy";
    case ErrorCode::HologramUnavailable: return "HologramUnavailable";
    case ErrorCode::NotCarrying: return "NotCarrying";
    case ErrorCode::TargetOccupied: return "TargetOccupied";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::StartOccupied: return "StartOccupied";
    case ErrorCode::GoalOccupied: return "GoalOccupied";
    case ErrorCode::CorruptLog: return "CorruptLog";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::UnknownMessageType: return "UnknownMessageType";
    case ErrorCode::EndpointBusy: return "EndpointBusy";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI, the sync server) can map it to exit codes or replies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sarw
