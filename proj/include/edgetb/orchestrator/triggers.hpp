#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgetb/orchestrator/pipeline.hpp"
#include "edgetb/security/posture.hpp"

namespace edgetb::orch {

struct BatteryLevel {
  NodeId node;
  double pct = 100.0;
};
struct BandwidthSample {
  NodeId node;
  NodeId peer;
  double bps = 0.0;
};
struct ThreatSignal {
  NodeId node;
  bool threat = true;
};
struct OperatorPipelineRequest {
  PipelineSpec pipeline;
};
struct OperatorPosture {
  std::optional<NodeId> node;  // nullopt: broadcast to every node
  security::PostureLevel level = security::PostureLevel::Normal;
};

using TriggerEvent = std::variant<BatteryLevel, BandwidthSample, ThreatSignal,
                                  OperatorPipelineRequest, OperatorPosture>;

struct TriggerConfig {
  double battery_low_pct = 20.0;
  double bandwidth_floor_bps = 0.0;  // 0 disables the filter trigger
};

struct EvictStages {
  NodeId node;
};
struct SetFilter {
  NodeId node;
  NodeId peer;
  bool enabled = true;
};
struct ApplyPosture {
  std::optional<NodeId> node;
  security::PostureTrigger trigger;
};
struct Allocate {
  PipelineSpec pipeline;
};

using AdaptationAction = std::variant<EvictStages, SetFilter, ApplyPosture, Allocate>;

// The adaptation rule table.
std::vector<AdaptationAction> on_trigger(const TriggerEvent& event, const TriggerConfig& config);

// Parses {"type": "battery"|"bandwidth"|"threat"|"pipeline"|"posture", ...}.
TriggerEvent parse_trigger(const nlohmann::json& j);

}  // namespace edgetb::orch
