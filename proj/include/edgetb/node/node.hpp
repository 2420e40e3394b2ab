#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "edgetb/common/types.hpp"
#include "edgetb/distrib/message.hpp"
#include "edgetb/node/stage.hpp"

namespace edgetb::node {

struct Location {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Location&) const = default;
};

struct Waypoint {
  SimTime at = 0;
  Location location;
};

struct NodeSpec {
  NodeId id;
  double cpu_capacity = 1.0;      // work-units/second
  double memory_capacity = 1.0;   // MB
  double battery_capacity = 1.0;  // joules
  Location location;
  std::vector<std::string> sensors;
  std::vector<Waypoint> waypoints;
  double idle_drain_w = 0.1;       // J/s while up
  double active_drain = 1.0;       // J per cpu-unit-second of busy stages
  std::size_t queue_high_watermark = 100;
};

void validate(const NodeSpec& spec);

enum class NodeStatus { Up, Down };

// Which share of the message-id hash space an instance consumes.
struct SlotFilter {
  std::uint32_t index = 0;
  std::uint32_t count = 1;
  bool accepts(std::uint64_t hash) const { return count <= 1 || hash % count == index; }
};

struct StageInstance {
  std::string instance_id;
  std::string pipeline;
  StageSpec stage;
  std::deque<distrib::Message> queue;
  double credit = 0.0;
  SlotFilter slot;
  // Redundant deployment: slot follows the node's membership view.
  bool follow_membership = false;
  std::uint64_t enqueued = 0;
  std::uint64_t consumed = 0;
  std::uint64_t discarded = 0;  // dropped when the instance was removed
  bool above_watermark = false;
};

struct NodeState {
  NodeSpec spec;
  NodeStatus status = NodeStatus::Up;
  double battery_j = 0.0;
  double cpu_free = 0.0;
  double mem_free = 0.0;
  std::vector<StageInstance> stages;
  std::optional<SimTime> threat_since;

  explicit NodeState(NodeSpec s);
  bool up() const { return status == NodeStatus::Up; }
  double battery_pct() const;
  StageInstance* find(const std::string& instance_id);
};

enum class AdmitReject { InsufficientCpu, InsufficientMemory };

std::string_view to_string(AdmitReject reason);

// True when the stage would fit on the node's current free resources.
bool fits(const NodeState& node, const StageSpec& stage);

// Reserves resources and creates an empty input queue on acceptance.
// Throws NodeDown when the node is down.
std::optional<AdmitReject> admit_stage(NodeState& node, const StageSpec& stage,
                                       const std::string& instance_id,
                                       const std::string& pipeline = {});

// Releases the instance's reservation; returns the number of queued items
// discarded with it.
std::size_t remove_stage(NodeState& node, const std::string& instance_id);

// Enqueues to an instance, returning true when the queue crosses the high
// watermark upward.
bool enqueue(StageInstance& instance, distrib::Message message, std::size_t high_watermark);

struct StageOutput {
  std::string instance_id;
  std::string pipeline;
  distrib::Message message;  // topic/priority/payload/trace_start filled in
  SimTime offset_ms = 0;     // completion time relative to step start
};

struct StepResult {
  std::vector<StageOutput> outputs;
  double drained_j = 0.0;
  bool went_down = false;
  SimTime elapsed_ms = 0;  // < dt when the battery ran out mid-step
};

// Payload for a produced item; the default emits `output_size` synthetic bytes.
using PayloadFn = std::function<Bytes(const StageInstance&, const distrib::Message& input)>;

Bytes synthetic_payload(const StageInstance& instance, const distrib::Message& input);

StepResult step_execute(NodeState& node, SimTime dt_ms, const PayloadFn& payload = {});

struct SensorReading {
  std::string sensor_id;
  SimTime at = 0;
  std::variant<double, Location, bool> value;
};

inline const std::vector<std::string> kSupportedSensors = {"battery", "location", "network",
                                                           "threat"};

Location interpolate(const std::vector<Waypoint>& waypoints, SimTime at,
                     const Location& fallback);

// `link_bandwidth` maps peer id -> most recent bandwidth measurement (bps).
std::vector<SensorReading> read_sensors(const NodeState& node, SimTime at,
                                        const std::map<NodeId, double>& link_bandwidth = {});

}  // namespace edgetb::node
