#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgetb/control/event_log.hpp"
#include "edgetb/control/scenario.hpp"
#include "edgetb/distrib/bus.hpp"
#include "edgetb/gateway/codec.hpp"
#include "edgetb/node/node.hpp"
#include "edgetb/orchestrator/membership.hpp"
#include "edgetb/orchestrator/placement.hpp"
#include "edgetb/security/posture.hpp"
#include "edgetb/security/token.hpp"
#include "edgetb/simnet/simulator.hpp"
#include "edgetb/store/replica.hpp"

namespace edgetb::control {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<SimTime> duration_ms;
  std::optional<bool> rebalance;
  std::ostream* log_out = nullptr;
};

struct CommandResult {
  int status = 200;
  json body = json::object();
};

// One simulated deployment: every node's runtime (stages, bus endpoint,
// replica, membership tracker, posture, orchestrator role) driven by the
// simulator's event queue. Single-threaded; callers serialize access.
class World {
 public:
  explicit World(Scenario scenario, RunOptions options = {});
  ~World();
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  SimTime now() const { return sim_.now(); }
  SimTime duration() const { return duration_; }
  std::uint64_t seed() const { return seed_; }

  // Runs to the configured duration and closes the log.
  void run();
  // Advances to min(t, duration).
  void run_until(SimTime t);
  // Emits run_end once.
  void finish();
  bool finished() const { return finished_; }

  // Applies a timed event now (scenario timers and the control API both go
  // through here).
  CommandResult apply(const TimedEvent& event, std::string_view source);
  CommandResult request_pipeline(const orch::PipelineSpec& pipeline, const std::string& deploy,
                                 std::string_view source);

  json topology() const;
  json queues() const;
  json placements() const;

  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }
  const Scenario& scenario() const { return scenario_; }
  simnet::Simulator& sim() { return sim_; }
  distrib::Bus& bus() { return bus_; }
  const gateway::CodecRegistry& codecs() const { return codecs_; }

  bool has_node(const NodeId& id) const { return nodes_.count(id) > 0; }
  const node::NodeState& node(const NodeId& id) const;
  store::Replica& replica(const NodeId& id);
  const security::SecurityPosture& posture(const NodeId& id) const;
  const orch::MembershipView& view(const NodeId& id) const;
  // Leader according to the lowest-id up node's view.
  std::optional<NodeId> leader() const;
  const orch::Placement* leader_placement() const;
  const security::TrustRoots& trust_roots() const { return roots_; }
  const security::CapabilityToken& token(const std::string& name) const;

 private:
  struct NodeRt;

  NodeRt& rt(const NodeId& id);
  const NodeRt& rt(const NodeId& id) const;

  void every(SimTime at, SimTime period, std::function<void()> fn);
  void schedule_source(std::size_t index, std::uint64_t k);

  void tick();
  void step_node(NodeRt& n);
  void heartbeat(NodeRt& n);
  void sample(NodeRt& n);
  void anti_entropy(NodeRt& n);

  void on_receive(const NodeId& node, const distrib::Message& message);
  void on_heartbeat(NodeRt& n, const distrib::Message& message);
  void on_command(NodeRt& n, const distrib::Message& message);
  void on_sync(NodeRt& n, const distrib::Message& message);
  void refresh(NodeRt& n, bool membership_changed);
  std::optional<std::string> gate(const NodeId& node, const distrib::Message& message);
  void set_posture(NodeRt& n, const security::PostureTrigger& trigger, const std::string& cause);

  void publish(const NodeId& node, distrib::Message message);
  void send_control(const NodeId& from, const std::set<NodeId>& to, std::string_view topic,
                    const json& payload);
  void fail_node(const NodeId& node, const std::string& cause);
  CommandResult restore_node(const NodeId& node);

  // Orchestrator role.
  std::optional<NodeId> operator_leader() const;
  void orchestrate(NodeRt& n);
  void become_leader(NodeRt& n);
  orch::MembershipView capacity_view(const NodeRt& n) const;
  void commit(NodeRt& n, const orch::Placement& next);
  void deploy(NodeRt& n, const std::string& id, const orch::PlacedInstance& inst);
  void undeploy(NodeRt& n, const std::string& id);
  void respread(orch::Placement& placement, const std::string& pipeline, const std::string& stage);
  bool replan(NodeRt& n, orch::Placement& next, const orch::PlacedInstance& lost,
              const std::set<NodeId>& exclude, const std::string& reason);
  std::string next_instance_id(NodeRt& n, const std::string& pipeline, const std::string& stage);

  Scenario scenario_;
  RunOptions options_;
  std::uint64_t seed_;
  SimTime duration_;
  bool rebalance_;
  EventLog log_;
  simnet::Simulator sim_;
  distrib::Bus bus_;
  gateway::CodecRegistry codecs_;
  std::map<NodeId, std::unique_ptr<NodeRt>> nodes_;
  security::TrustRoots roots_;
  std::map<std::string, security::CapabilityToken> tokens_;
  std::map<std::string, std::string> sink_pipeline_;  // sink topic -> pipeline id
  std::set<std::pair<NodeId, std::string>> sinks_;
  std::vector<std::mt19937_64> source_rng_;
  bool finished_ = false;
};

}  // namespace edgetb::control
