#include "edgetb/orchestrator/triggers.hpp"

#include "edgetb/common/error.hpp"

namespace edgetb::orch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

template <class T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw Error(Errc::UnknownTrigger, std::string("missing ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::UnknownTrigger, std::string("bad ") + key);
  }
}

}  // namespace

std::vector<AdaptationAction> on_trigger(const TriggerEvent& event, const TriggerConfig& config) {
  std::vector<AdaptationAction> out;
  std::visit(
      overloaded{
          [&](const BatteryLevel& e) {
            if (e.pct < config.battery_low_pct) out.emplace_back(EvictStages{e.node});
          },
          [&](const BandwidthSample& e) {
            if (config.bandwidth_floor_bps <= 0) return;
            out.emplace_back(SetFilter{e.node, e.peer, e.bps < config.bandwidth_floor_bps});
          },
          [&](const ThreatSignal& e) {
            out.emplace_back(ApplyPosture{e.node, security::ThreatTrigger{e.threat}});
          },
          [&](const OperatorPipelineRequest& e) { out.emplace_back(Allocate{e.pipeline}); },
          [&](const OperatorPosture& e) {
            out.emplace_back(ApplyPosture{e.node, security::OperatorTrigger{e.level}});
          },
      },
      event);
  return out;
}

TriggerEvent parse_trigger(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::UnknownTrigger, "trigger must be an object");
  const auto type = require<std::string>(j, "type");
  if (type == "battery") {
    return BatteryLevel{require<std::string>(j, "node"), require<double>(j, "pct")};
  }
  if (type == "bandwidth") {
    return BandwidthSample{require<std::string>(j, "node"), require<std::string>(j, "peer"),
                           require<double>(j, "bps")};
  }
  if (type == "threat") {
    return ThreatSignal{require<std::string>(j, "node"), j.value("threat", true)};
  }
  if (type == "posture") {
    OperatorPosture p;
    if (j.contains("node")) p.node = require<std::string>(j, "node");
    try {
      p.level = security::parse_posture_level(require<std::string>(j, "level"));
    } catch (const Error& e) {
      throw Error(Errc::UnknownTrigger, e.detail());
    }
    return p;
  }
  if (type == "pipeline") {
    OperatorPipelineRequest r;
    r.pipeline.id = require<std::string>(j, "id");
    return r;
  }
  throw Error(Errc::UnknownTrigger, type);
}

}  // namespace edgetb::orch
