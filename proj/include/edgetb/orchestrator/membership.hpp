#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "edgetb/common/types.hpp"

namespace edgetb::orch {

struct InstanceReport {
  std::string instance_id;
  std::string pipeline;
  std::string stage;
  std::size_t depth = 0;
  bool operator==(const InstanceReport&) const = default;
};

// What a node advertises in each heartbeat.
struct Advertisement {
  double cpu_capacity = 0.0;
  double mem_capacity = 0.0;
  double cpu_free = 0.0;
  double mem_free = 0.0;
  double battery_pct = 100.0;
  std::vector<InstanceReport> instances;
  std::set<std::string> subscriptions;
  bool operator==(const Advertisement&) const = default;
};

struct Heartbeat {
  NodeId node;
  SimTime at = 0;
  Advertisement state;
};

struct Member {
  NodeId id;
  SimTime last_heartbeat = 0;
  Advertisement state;
};

struct MembershipView {
  std::uint64_t epoch = 0;
  std::map<NodeId, Member> live;

  bool contains(const NodeId& node) const { return live.count(node) > 0; }
  std::set<NodeId> ids() const;
  bool empty() const { return live.empty(); }
};

struct MembershipConfig {
  SimTime heartbeat_ms = 500;
  int missed_limit = 3;  // K
  SimTime timeout() const { return heartbeat_ms * missed_limit; }
};

// Heartbeat-driven failure detector. A node is live iff its last heartbeat
// is no older than K x H; every join or drop bumps the epoch.
class MembershipTracker {
 public:
  explicit MembershipTracker(MembershipConfig config = {}) : config_(config) {}

  // Returns true when the live set changed.
  bool observe(const Heartbeat& heartbeat);
  bool evaluate(SimTime now);

  const MembershipView& view() const { return view_; }
  const MembershipConfig& config() const { return config_; }

 private:
  MembershipConfig config_;
  MembershipView view_;
};

MembershipView build_membership(std::vector<Heartbeat> heartbeats, SimTime now,
                                MembershipConfig config = {});

}  // namespace edgetb::orch
