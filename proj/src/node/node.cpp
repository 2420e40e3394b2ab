#include "edgetb/node/node.hpp"

#include <algorithm>
#include <cmath>

#include "edgetb/common/error.hpp"

namespace edgetb::node {

namespace {

constexpr double kEps = 1e-9;

}  // namespace

void validate(const NodeSpec& spec) {
  if (spec.id.empty()) throw Error(Errc::InvalidArgument, "empty node id");
  if (!(spec.cpu_capacity > 0) || !(spec.memory_capacity > 0) ||
      !(spec.battery_capacity > 0)) {
    throw Error(Errc::InvalidArgument, "node " + spec.id + ": capacities must be > 0");
  }
  if (spec.idle_drain_w < 0 || spec.active_drain < 0) {
    throw Error(Errc::InvalidArgument, "node " + spec.id + ": negative drain");
  }
}

NodeState::NodeState(NodeSpec s)
    : spec(std::move(s)),
      battery_j(spec.battery_capacity),
      cpu_free(spec.cpu_capacity),
      mem_free(spec.memory_capacity) {}

double NodeState::battery_pct() const {
  return 100.0 * battery_j / spec.battery_capacity;
}

StageInstance* NodeState::find(const std::string& instance_id) {
  for (auto& s : stages) {
    if (s.instance_id == instance_id) return &s;
  }
  return nullptr;
}

std::string_view to_string(AdmitReject reason) {
  switch (reason) {
    case AdmitReject::InsufficientCpu: return "InsufficientCpu";
    case AdmitReject::InsufficientMemory: return "InsufficientMemory";
  }
  return "?";
}

bool fits(const NodeState& node, const StageSpec& stage) {
  return node.cpu_free + kEps >= stage.cpu_demand && node.mem_free + kEps >= stage.mem_demand;
}

std::optional<AdmitReject> admit_stage(NodeState& node, const StageSpec& stage,
                                       const std::string& instance_id,
                                       const std::string& pipeline) {
  if (!node.up()) throw Error(Errc::NodeDown, node.spec.id);
  if (node.cpu_free + kEps < stage.cpu_demand) return AdmitReject::InsufficientCpu;
  if (node.mem_free + kEps < stage.mem_demand) return AdmitReject::InsufficientMemory;
  if (node.find(instance_id)) throw Error(Errc::DuplicateId, instance_id);
  node.cpu_free -= stage.cpu_demand;
  node.mem_free -= stage.mem_demand;
  StageInstance inst;
  inst.instance_id = instance_id;
  inst.pipeline = pipeline;
  inst.stage = stage;
  node.stages.push_back(std::move(inst));
  return std::nullopt;
}

std::size_t remove_stage(NodeState& node, const std::string& instance_id) {
  auto it = std::find_if(node.stages.begin(), node.stages.end(),
                         [&](const StageInstance& s) { return s.instance_id == instance_id; });
  if (it == node.stages.end()) return 0;
  const std::size_t dropped = it->queue.size();
  node.cpu_free = std::min(node.spec.cpu_capacity, node.cpu_free + it->stage.cpu_demand);
  node.mem_free = std::min(node.spec.memory_capacity, node.mem_free + it->stage.mem_demand);
  node.stages.erase(it);
  return dropped;
}

bool enqueue(StageInstance& instance, distrib::Message message, std::size_t high_watermark) {
  instance.queue.push_back(std::move(message));
  ++instance.enqueued;
  if (!instance.above_watermark && instance.queue.size() >= high_watermark) {
    instance.above_watermark = true;
    return true;
  }
  return false;
}

Bytes synthetic_payload(const StageInstance& instance, const distrib::Message& input) {
  Bytes out(instance.stage.output_size);
  // Deterministic filler derived from the input identity.
  std::uint64_t x = input.id().hash() ^ 0x9e3779b97f4a7c15ull;
  for (auto& b : out) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    b = static_cast<std::uint8_t>(x);
  }
  return out;
}

StepResult step_execute(NodeState& node, SimTime dt_ms, const PayloadFn& payload) {
  if (!node.up()) throw Error(Errc::NodeDown, node.spec.id);
  if (dt_ms <= 0) throw Error(Errc::InvalidArgument, "dt_ms must be > 0");

  // Constant power across the step: idle draw plus every stage that has work
  // queued at step start running at its reserved share.
  double power = node.spec.idle_drain_w;
  for (const auto& s : node.stages) {
    if (!s.queue.empty()) power += node.spec.active_drain * s.stage.cpu_demand;
  }

  StepResult result;
  double elapsed_s = static_cast<double>(dt_ms) / 1000.0;
  if (power > 0 && node.battery_j <= power * elapsed_s) {
    elapsed_s = node.battery_j / power;
    result.went_down = true;
  }
  result.elapsed_ms = static_cast<SimTime>(std::floor(elapsed_s * 1000.0 + kEps));

  for (auto& inst : node.stages) {
    if (inst.queue.empty()) {
      inst.credit = 0.0;
      continue;
    }
    const double rate = inst.stage.service_rate();
    const double start_credit = inst.credit;
    inst.credit += rate * elapsed_s;
    const auto whole = static_cast<std::size_t>(std::floor(inst.credit + kEps));
    const std::size_t n = std::min(whole, inst.queue.size());
    for (std::size_t k = 1; k <= n; ++k) {
      distrib::Message in = std::move(inst.queue.front());
      inst.queue.pop_front();
      ++inst.consumed;
      StageOutput out;
      out.instance_id = inst.instance_id;
      out.pipeline = inst.pipeline;
      out.message.topic = inst.stage.output_topic;
      out.message.priority = in.priority;
      out.message.trace_start = in.trace_start != 0 ? in.trace_start : in.created_at;
      out.message.payload = payload ? payload(inst, in) : synthetic_payload(inst, in);
      const double done_s = rate > 0 ? (static_cast<double>(k) - start_credit) / rate : 0.0;
      out.offset_ms = std::clamp<SimTime>(
          static_cast<SimTime>(std::ceil(done_s * 1000.0 - kEps)), 0, result.elapsed_ms);
      result.outputs.push_back(std::move(out));
    }
    inst.credit -= static_cast<double>(n);
    if (inst.queue.empty()) inst.credit = 0.0;
    if (inst.above_watermark && inst.queue.size() < node.spec.queue_high_watermark) {
      inst.above_watermark = false;
    }
  }

  result.drained_j = result.went_down ? node.battery_j : power * elapsed_s;
  node.battery_j = std::max(0.0, node.battery_j - result.drained_j);
  if (result.went_down) {
    node.battery_j = 0.0;
    node.status = NodeStatus::Down;
  }
  return result;
}

Location interpolate(const std::vector<Waypoint>& waypoints, SimTime at,
                     const Location& fallback) {
  if (waypoints.empty()) return fallback;
  if (at <= waypoints.front().at) return waypoints.front().location;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Waypoint& a = waypoints[i - 1];
    const Waypoint& b = waypoints[i];
    if (at <= b.at) {
      const double f = static_cast<double>(at - a.at) / static_cast<double>(b.at - a.at);
      return Location{a.location.x + f * (b.location.x - a.location.x),
                      a.location.y + f * (b.location.y - a.location.y)};
    }
  }
  return waypoints.back().location;
}

std::vector<SensorReading> read_sensors(const NodeState& node, SimTime at,
                                        const std::map<NodeId, double>& link_bandwidth) {
  if (!node.up()) throw Error(Errc::NodeDown, node.spec.id);
  const auto& configured = node.spec.sensors.empty() ? kSupportedSensors : node.spec.sensors;
  std::vector<SensorReading> out;
  for (const std::string& sensor : configured) {
    if (sensor == "battery") {
      out.push_back({"battery", at, node.battery_pct()});
    } else if (sensor == "location") {
      out.push_back({"location", at, interpolate(node.spec.waypoints, at, node.spec.location)});
    } else if (sensor == "network") {
      for (const auto& [peer, bps] : link_bandwidth) {
        out.push_back({"network:" + peer, at, bps});
      }
    } else if (sensor == "threat") {
      out.push_back({"threat", at, node.threat_since.has_value() && *node.threat_since <= at});
    }
    // orientation, bluetooth, nfc: declared ids without a model.
  }
  return out;
}

}  // namespace edgetb::node
