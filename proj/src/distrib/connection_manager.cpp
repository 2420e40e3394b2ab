#include "edgetb/distrib/connection_manager.hpp"

namespace edgetb::distrib {

ConnectionTable connect_services(const SubscriptionMap& subscriptions,
                                 const std::set<NodeId>& live) {
  ConnectionTable table;
  for (const NodeId& publisher : live) {
    for (const auto& [topic, subscribers] : subscriptions) {
      std::set<NodeId> dests;
      for (const NodeId& s : subscribers) {
        if (s != publisher && live.count(s)) dests.insert(s);
      }
      if (!dests.empty()) table[{publisher, topic}] = std::move(dests);
    }
  }
  return table;
}

void ConnectionManager::update(const SubscriptionMap& subscriptions,
                               const std::set<NodeId>& live) {
  subscriptions_ = subscriptions;
  live_ = live;
  for (const auto& [topic, subs] : subscriptions) {
    if (!subs.empty()) ever_seen_.insert(topic);
  }
  std::set<NodeId> publishers = live;
  publishers.insert(self_);
  ConnectionTable all = connect_services(subscriptions, publishers);
  table_.clear();
  for (auto& [key, dests] : all) {
    if (key.first == self_) table_.emplace(key, std::move(dests));
  }
}

std::set<NodeId> ConnectionManager::destinations(const std::string& topic) const {
  auto it = table_.find({self_, topic});
  return it == table_.end() ? std::set<NodeId>{} : it->second;
}

std::set<NodeId> ConnectionManager::dormant_destinations(const std::string& topic) const {
  std::set<NodeId> out;
  auto it = subscriptions_.find(topic);
  if (it == subscriptions_.end()) return out;
  for (const NodeId& s : it->second) {
    if (s != self_ && !live_.count(s)) out.insert(s);
  }
  return out;
}

bool ConnectionManager::subscribed_locally(const std::string& topic) const {
  auto it = subscriptions_.find(topic);
  return it != subscriptions_.end() && it->second.count(self_) > 0;
}

}  // namespace edgetb::distrib
