#include "edgetb/orchestrator/membership.hpp"

#include <algorithm>

namespace edgetb::orch {

std::set<NodeId> MembershipView::ids() const {
  std::set<NodeId> out;
  for (const auto& [id, _] : live) out.insert(id);
  return out;
}

bool MembershipTracker::evaluate(SimTime now) {
  // Drop in expiry order so the epoch sequence is independent of map order.
  std::vector<std::pair<SimTime, NodeId>> expired;
  for (const auto& [id, m] : view_.live) {
    if (now - m.last_heartbeat > config_.timeout()) expired.emplace_back(m.last_heartbeat, id);
  }
  std::sort(expired.begin(), expired.end());
  for (const auto& [_, id] : expired) {
    view_.live.erase(id);
    ++view_.epoch;
  }
  return !expired.empty();
}

bool MembershipTracker::observe(const Heartbeat& hb) {
  bool changed = evaluate(hb.at);
  auto it = view_.live.find(hb.node);
  if (it == view_.live.end()) {
    if (hb.at < 0) return changed;
    view_.live.emplace(hb.node, Member{hb.node, hb.at, hb.state});
    ++view_.epoch;
    return true;
  }
  // Reordered heartbeats never move liveness backwards.
  if (hb.at >= it->second.last_heartbeat) {
    it->second.last_heartbeat = hb.at;
    it->second.state = hb.state;
  }
  return changed;
}

MembershipView build_membership(std::vector<Heartbeat> heartbeats, SimTime now,
                                MembershipConfig config) {
  std::stable_sort(heartbeats.begin(), heartbeats.end(),
                   [](const Heartbeat& a, const Heartbeat& b) { return a.at < b.at; });
  MembershipTracker tracker(config);
  for (const Heartbeat& hb : heartbeats) {
    if (hb.at > now) break;
    tracker.observe(hb);
  }
  tracker.evaluate(now);
  return tracker.view();
}

}  // namespace edgetb::orch
