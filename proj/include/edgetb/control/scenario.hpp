#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgetb/common/error.hpp"
#include "edgetb/distrib/bus.hpp"
#include "edgetb/node/node.hpp"
#include "edgetb/orchestrator/placement.hpp"
#include "edgetb/orchestrator/triggers.hpp"
#include "edgetb/simnet/simulator.hpp"

namespace edgetb::control {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// A ValidationError pointing at the offending field as a JSON pointer.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string path, const std::string& reason, bool unresolved = false)
      : Error(Errc::ValidationError, path + ": " + reason),
        path_(std::move(path)),
        unresolved_(unresolved) {}
  const std::string& path() const noexcept { return path_; }
  // True when the field names an entity that does not exist.
  bool unresolved() const noexcept { return unresolved_; }

 private:
  std::string path_;
  bool unresolved_ = false;
};

struct Settings {
  bool rebalance = true;
  SimTime tick_ms = 100;
  SimTime sample_ms = 1000;
  SimTime anti_entropy_ms = 2000;
  orch::MembershipConfig membership;
  orch::RebalanceConfig rebalancer;
  orch::TriggerConfig triggers;
  distrib::BusConfig bus;
};

struct LinkSpec {
  NodeId a;
  NodeId b;
  simnet::LinkProfile profile;
  std::vector<simnet::LinkChange> schedule;
};

struct TopicSpec {
  std::string name;
  distrib::TopicConfig config;
};

struct PipelineDeploy {
  orch::PipelineSpec spec;
  std::string deploy = "placed";  // "placed" | "redundant"
  SimTime start_ms = 1000;
};

struct EncodeSpec {
  std::string codec;  // payload is a whole message in this codec
  std::string topic;  // topic of the inner message
};

struct SourceSpec {
  std::string id;
  NodeId node;
  std::string topic;
  double rate_hz = 1.0;
  std::uint32_t payload_size = 32;
  std::uint8_t priority = 2;
  SimTime start_ms = 0;
  std::optional<SimTime> stop_ms;
  std::optional<EncodeSpec> encode;
};

struct SinkSpec {
  NodeId node;
  std::string topic;
};

struct KeySpec {
  std::string id;
  std::string seed_hex;
};

struct TokenSpec {
  std::string name;
  NodeId holder;
  std::string subject;
  std::set<std::string> rights;
  SimTime issued_at = 0;
  SimTime expires_at = 0;
  std::string issuer;
};

struct SecuritySpec {
  std::vector<KeySpec> keys;
  std::vector<std::string> trust_roots;  // key ids
  std::vector<TokenSpec> tokens;
};

struct TimedEvent {
  SimTime at_ms = 0;
  std::string type;
  json body;  // the whole event object, validated
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  std::uint64_t seed = 0;
  SimTime duration_ms = 0;
  Settings settings;
  std::vector<node::NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<TopicSpec> topics;
  std::vector<PipelineDeploy> pipelines;
  std::vector<SourceSpec> sources;
  std::vector<SinkSpec> sinks;
  SecuritySpec security;
  std::vector<TimedEvent> events;

  bool has_node(const NodeId& id) const;
  bool has_token(const std::string& name) const;
  // Declared topics plus every topic a pipeline stage reads or writes.
  std::set<std::string> known_topics() const;
};

// ParseError on malformed JSON, ScenarioError on schema or reference
// violations.
Scenario load_scenario(std::string_view text);
Scenario load_scenario_file(const std::string& path);

// Checks one timed event against the scenario; `path` prefixes error paths.
// Used for scenario events and for events injected over the API (where
// at_ms may be omitted).
TimedEvent parse_event(const json& j, const Scenario& scenario, const std::string& path,
                       bool require_time = true);

inline const std::set<std::string> kEventTypes{
    "link_profile", "node_fail",  "node_restore", "publish",   "request_pipeline",
    "revoke_token", "posture",    "threat",       "partition", "heal",
    "store_put",    "store_get",  "verify_token", "battery"};

// JSON forms shared by the scenario, the API and the log.
orch::StageSpec stage_from_json(const json& j, const std::string& path);
orch::PipelineSpec pipeline_from_json(const json& j, const std::string& path);
json to_json(const orch::StageSpec& stage);
json to_json(const orch::PipelineSpec& pipeline);
json to_json(const orch::PlacedInstance& instance);
orch::PlacedInstance placed_from_json(const json& j);
json to_json(const simnet::LinkProfile& profile);

}  // namespace edgetb::control
