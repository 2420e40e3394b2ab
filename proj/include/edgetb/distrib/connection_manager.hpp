#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>

#include "edgetb/common/types.hpp"

namespace edgetb::distrib {

using SubscriptionMap = std::map<std::string, std::set<NodeId>>;  // topic -> subscribers

// (publisher, topic) -> direct destinations. Every path is a single hop.
using ConnectionTable = std::map<std::pair<NodeId, std::string>, std::set<NodeId>>;

ConnectionTable connect_services(const SubscriptionMap& subscriptions,
                                 const std::set<NodeId>& live);

// A node's connection manager. Rebuilt from the subscriptions advertised in
// heartbeats whenever the local membership view changes.
class ConnectionManager {
 public:
  explicit ConnectionManager(NodeId self = {}) : self_(std::move(self)) {}

  void update(const SubscriptionMap& subscriptions, const std::set<NodeId>& live);

  // Remote destinations for a publish from this node; never contains self.
  std::set<NodeId> destinations(const std::string& topic) const;
  // Known subscribers that are not live right now. Custody-capable traffic
  // still addresses them so bundles can wait out a disconnection.
  std::set<NodeId> dormant_destinations(const std::string& topic) const;
  bool subscribed_locally(const std::string& topic) const;
  bool known_topic(const std::string& topic) const { return ever_seen_.count(topic) > 0; }
  void mark_known(const std::string& topic) { ever_seen_.insert(topic); }
  const ConnectionTable& table() const { return table_; }

 private:
  NodeId self_;
  SubscriptionMap subscriptions_;
  std::set<NodeId> live_;
  ConnectionTable table_;
  std::set<std::string> ever_seen_;
};

}  // namespace edgetb::distrib
