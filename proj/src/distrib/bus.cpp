#include "edgetb/distrib/bus.hpp"

#include <algorithm>

#include "edgetb/common/error.hpp"
#include "edgetb/distrib/compression.hpp"
#include "edgetb/distrib/envelope.hpp"
#include "edgetb/distrib/filter.hpp"
#include "edgetb/distrib/frame.hpp"

namespace edgetb::distrib {

namespace {

Fields message_fields(const Message& m) {
  return Fields{{"topic", m.topic}, {"origin", m.origin}, {"msg_seq", m.seq},
                {"priority", m.priority}};
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Sent: return "sent";
    case Outcome::Bundled: return "bundled";
    case Outcome::Queued: return "queued";
    case Outcome::Dropped: return "dropped";
  }
  return "?";
}

bool is_reserved_topic(std::string_view topic) {
  return topic == kHeartbeatTopic || topic == kCommandTopic ||
         topic == kStoreSyncTopic || topic == kRevokeTopic;
}

Bus::Bus(simnet::Simulator& sim, EventSink& sink, BusConfig config)
    : sim_(sim), sink_(sink), config_(config) {}

void Bus::add_node(const NodeId& node) {
  if (endpoints_.count(node)) throw Error(Errc::DuplicateId, node);
  Endpoint ep;
  ep.id = node;
  ep.connections = ConnectionManager(node);
  endpoints_.emplace(node, std::move(ep));
}

Bus::Endpoint& Bus::endpoint(const NodeId& node) {
  auto it = endpoints_.find(node);
  if (it == endpoints_.end()) throw Error(Errc::UnknownNode, node);
  return it->second;
}

const Bus::Endpoint& Bus::endpoint(const NodeId& node) const {
  auto it = endpoints_.find(node);
  if (it == endpoints_.end()) throw Error(Errc::UnknownNode, node);
  return it->second;
}

void Bus::set_node_up(const NodeId& node, bool up) {
  Endpoint& ep = endpoint(node);
  ep.up = up;
  if (!up) {
    // Volatile transport state is lost with the node; custody bundles are
    // persisted and survive.
    ep.unacked.clear();
    ep.history.clear();
    ep.filtered.clear();
  }
}

bool Bus::node_up(const NodeId& node) const { return endpoint(node).up; }

void Bus::set_topic(const std::string& topic, TopicConfig config) {
  validate(config.qos);
  if (!known_compressor(config.compression)) {
    throw Error(Errc::InvalidArgument, "compressor " + config.compression);
  }
  topics_[topic] = std::move(config);
}

const TopicConfig& Bus::topic(const std::string& topic) const {
  auto it = topics_.find(topic);
  return it == topics_.end() ? default_topic_ : it->second;
}

void Bus::subscribe(const NodeId& node, const std::string& topic) {
  endpoint(node).subscriptions.insert(topic);
}

void Bus::unsubscribe(const NodeId& node, const std::string& topic) {
  endpoint(node).subscriptions.erase(topic);
}

const std::set<std::string>& Bus::subscriptions(const NodeId& node) const {
  return endpoint(node).subscriptions;
}

void Bus::update_view(const NodeId& node, const SubscriptionMap& subscriptions,
                      const std::set<NodeId>& live) {
  endpoint(node).connections.update(subscriptions, live);
}

const ConnectionManager& Bus::connections(const NodeId& node) const {
  return endpoint(node).connections;
}

PublishResult Bus::publish(const NodeId& node, Message message) {
  const QosProfile qos = topic(message.topic).qos;
  return publish(node, std::move(message), qos);
}

PublishResult Bus::publish(const NodeId& node, Message message, const QosProfile& qos) {
  Endpoint& ep = endpoint(node);
  if (!ep.up) throw Error(Errc::NodeDown, node);
  if (message.topic.empty()) throw Error(Errc::InvalidArgument, "empty topic");
  validate(qos);
  const bool local = ep.subscriptions.count(message.topic) > 0;
  std::set<NodeId> dests = ep.connections.destinations(message.topic);
  if (qos.bundle_eligible) dests.merge(ep.connections.dormant_destinations(message.topic));
  dests.erase(node);
  if (dests.empty() && !local && !ep.connections.known_topic(message.topic)) {
    PublishResult result;
    message.origin = node;
    message.seq = ep.next_seq++;
    result.id = message.id();
    result.unknown_topic = true;
    sink_.emit("unknown_topic", Fields{{"node", node}, {"topic", message.topic}});
    return result;
  }
  return dispatch(ep, dests, local, std::move(message), qos);
}

PublishResult Bus::send_to(const NodeId& node, const std::set<NodeId>& destinations,
                           Message message, const QosProfile& qos) {
  Endpoint& ep = endpoint(node);
  if (!ep.up) throw Error(Errc::NodeDown, node);
  validate(qos);
  std::set<NodeId> dests = destinations;
  const bool local = dests.erase(node) > 0;
  return dispatch(ep, dests, local, std::move(message), qos);
}

PublishResult Bus::dispatch(Endpoint& ep, const std::set<NodeId>& destinations,
                            bool deliver_locally, Message message,
                            const QosProfile& qos) {
  if (message.priority > kLowestPriority) {
    throw Error(Errc::InvalidArgument, "priority " + std::to_string(message.priority));
  }
  message.origin = ep.id;
  message.seq = ep.next_seq++;
  message.created_at = sim_.now();
  if (message.trace_start == 0) message.trace_start = message.created_at;

  PublishResult result;
  result.id = message.id();

  if (gate_ && !is_reserved_topic(message.topic)) {
    if (auto denied = gate_(ep.id, message)) {
      Fields f = message_fields(message);
      f["node"] = ep.id;
      f["reason"] = *denied;
      sink_.emit("PostureDenied", std::move(f));
      for (const NodeId& dst : destinations) {
        result.outcomes.push_back({dst, Outcome::Dropped, "PostureDenied"});
      }
      return result;
    }
  }

  for (const NodeId& dst : destinations) {
    DestinationOutcome out{dst, Outcome::Dropped, {}};
    out.outcome = offer(ep, dst, message, qos, out.reason);
    result.outcomes.push_back(std::move(out));
  }
  if (deliver_locally) {
    result.local_delivery = true;
    deliver_local(ep.id, message);
  }
  return result;
}

bool Bus::link_usable(const NodeId& src, const NodeId& dst) const {
  if (!sim_.has_link(src, dst)) return false;
  if (!sim_.profile(LinkId::of(src, dst)).carries_traffic()) return false;
  return sim_.queue_delay(src, dst) <= config_.max_queue_delay_ms;
}

Outcome Bus::offer(Endpoint& ep, const NodeId& dst, const Message& message,
                   const QosProfile& qos, std::string& reason) {
  if (!sim_.has_link(ep.id, dst)) {
    reason = "NoRoute";
    return Outcome::Dropped;
  }
  if (filter_enabled(ep.id, dst)) {
    ep.filtered[dst].push_back(Pending{message, qos});
    return Outcome::Queued;
  }
  const bool up = sim_.profile(LinkId::of(ep.id, dst)).carries_traffic();
  if (link_usable(ep.id, dst) && transmit_data(ep, dst, message, qos.reliable(), &reason)) {
    if (qos.reliable()) track_unacked(ep, dst, message, qos);
    return Outcome::Sent;
  }
  if (qos.bundle_eligible) {
    store_bundle(ep, dst, message, qos);
    return Outcome::Bundled;
  }
  if (qos.reliable()) {
    track_unacked(ep, dst, message, qos);
    return Outcome::Queued;
  }
  reason = up ? "Budget" : "LinkDown";
  Fields f = message_fields(message);
  f["node"] = ep.id;
  f["dst"] = dst;
  f["reason"] = reason;
  sink_.emit("publish_drop", std::move(f));
  return Outcome::Dropped;
}

bool Bus::transmit_data(Endpoint& ep, const NodeId& dst, const Message& message,
                        bool reliable, std::string* reason) {
  if (gate_ && !is_reserved_topic(message.topic)) {
    if (auto denied = gate_(ep.id, message)) {
      if (reason) *reason = "PostureDenied";
      return false;
    }
  }
  const TopicConfig& cfg = topic(message.topic);
  Message wire = message;
  wire.payload = compress(cfg.compression, message.payload);
  DataEnvelope env{reliable,          message.origin,      message.seq,
                   message.created_at, message.trace_start, encode_frame(wire)};
  Bytes bytes = encode_envelope(env);
  const std::size_t size = bytes.size();
  const auto decision = sim_.transmit(ep.id, dst, std::move(bytes));

  Fields f{{"src", ep.id}, {"dst", dst}, {"link", LinkId::of(ep.id, dst).str()},
           {"bytes", size}, {"kind", "data"}, {"topic", message.topic},
           {"origin", message.origin}, {"msg_seq", message.seq},
           {"critical", cfg.critical || is_reserved_topic(message.topic)}};
  if (const auto* s = std::get_if<simnet::Scheduled>(&decision)) {
    f["deliver_at"] = s->at;
    sink_.emit("frame_tx", std::move(f));
    return true;
  }
  const auto drop = std::get<simnet::Dropped>(decision).reason;
  f["reason"] = std::string(simnet::to_string(drop));
  if (drop == simnet::FrameDrop::Loss) {
    // The frame left the node and occupied the link; the medium lost it.
    sink_.emit("frame_tx", f);
    sink_.emit("frame_drop", std::move(f));
    return true;
  }
  sink_.emit("frame_drop", std::move(f));
  if (reason) *reason = "LinkDown";
  return false;
}

SimTime Bus::retransmit_timeout(const NodeId& src, const NodeId& dst, const Message& m,
                                int attempt) const {
  SimTime base = 1;
  if (sim_.has_link(src, dst)) {
    const auto p = sim_.base_profile(LinkId::of(src, dst));
    base = 2 * (p.latency_ms + simnet::serialization_ms(
                                   (encoded_frame_size(m) + 32) * 8, p.bandwidth_bps));
  }
  base = std::clamp<SimTime>(base, 1, config_.retransmit_cap_ms);
  SimTime rto = base;
  for (int i = 0; i < attempt && rto < config_.retransmit_cap_ms; ++i) rto *= 2;
  return std::min(rto, config_.retransmit_cap_ms);
}

void Bus::track_unacked(Endpoint& ep, const NodeId& dst, const Message& message,
                        const QosProfile& qos) {
  const MessageId id = message.id();
  auto [it, inserted] = ep.unacked.try_emplace({dst, id}, Unacked{message, qos, 0});
  if (!inserted) return;
  auto& hist = ep.history[message.topic];
  if (std::find(hist.begin(), hist.end(), id) == hist.end()) hist.push_back(id);
  while (hist.size() > qos.history_depth) {
    const MessageId victim = hist.front();
    hist.pop_front();
    for (auto u = ep.unacked.begin(); u != ep.unacked.end();) {
      if (u->first.second == victim) {
        u = ep.unacked.erase(u);
      } else {
        ++u;
      }
    }
    sink_.emit("history_evict", Fields{{"node", ep.id}, {"topic", message.topic},
                                       {"origin", victim.origin}, {"msg_seq", victim.seq}});
  }
  if (ep.unacked.count({dst, id})) schedule_retransmit(ep.id, dst, id, 0);
}

void Bus::schedule_retransmit(const NodeId& node, const NodeId& dst, const MessageId& id,
                              int attempt) {
  const Endpoint& ep = endpoint(node);
  auto it = ep.unacked.find({dst, id});
  if (it == ep.unacked.end()) return;
  const SimTime rto = retransmit_timeout(node, dst, it->second.message, attempt);
  sim_.schedule_at(sim_.now() + rto, [this, node, dst, id] { on_retransmit(node, dst, id); });
}

void Bus::on_retransmit(const NodeId& node, const NodeId& dst, const MessageId& id) {
  Endpoint& ep = endpoint(node);
  if (!ep.up) return;
  auto it = ep.unacked.find({dst, id});
  if (it == ep.unacked.end()) return;
  Unacked& u = it->second;
  if (u.qos.deadline_ms && sim_.now() - u.message.created_at > *u.qos.deadline_ms) {
    Fields f = message_fields(u.message);
    f["node"] = node;
    f["dst"] = dst;
    sink_.emit("deadline_expired", std::move(f));
    ep.unacked.erase(it);
    return;
  }
  ++u.attempts;
  if (link_usable(node, dst)) {
    if (transmit_data(ep, dst, u.message, true)) {
      Fields f = message_fields(u.message);
      f["node"] = node;
      f["dst"] = dst;
      f["attempt"] = u.attempts;
      sink_.emit("retransmit", std::move(f));
    }
  }
  schedule_retransmit(node, dst, id, u.attempts);
}

void Bus::store_bundle(Endpoint& ep, const NodeId& dst, const Message& message,
                       const QosProfile& qos) {
  Bundle b{message, dst, qos.bundle_ttl_ms, ep.id, sim_.now(), qos.reliable()};
  Fields f = message_fields(message);
  f["node"] = ep.id;
  f["dst"] = dst;
  f["ttl_ms"] = qos.bundle_ttl_ms;
  sink_.emit("bundle_stored", std::move(f));
  ep.bundles.push_back(std::move(b));
}

std::vector<BundleEvent> Bus::forward_bundles(const NodeId& node) {
  Endpoint& ep = endpoint(node);
  std::vector<BundleEvent> events;
  if (!ep.up) return events;
  const SimTime now = sim_.now();

  std::vector<Bundle> live;
  for (Bundle& b : ep.bundles) {
    if (b.expired(now)) {
      Fields f = message_fields(b.message);
      f["node"] = node;
      f["dst"] = b.destination;
      f["age_ms"] = now - b.created_at;
      sink_.emit("bundle_expired", std::move(f));
      events.push_back({BundleEvent::Kind::Expired, std::move(b)});
    } else {
      live.push_back(std::move(b));
    }
  }
  std::stable_sort(live.begin(), live.end(), [](const Bundle& x, const Bundle& y) {
    if (x.message.priority != y.message.priority) {
      return x.message.priority < y.message.priority;
    }
    return x.created_at < y.created_at;
  });

  std::vector<Bundle> kept;
  for (Bundle& b : live) {
    if (link_usable(node, b.destination) &&
        transmit_data(ep, b.destination, b.message, b.reliable)) {
      Fields f = message_fields(b.message);
      f["node"] = node;
      f["dst"] = b.destination;
      f["held_ms"] = now - b.created_at;
      sink_.emit("bundle_forwarded", std::move(f));
      if (b.reliable) {
        QosProfile qos;
        qos.reliability = Reliability::Reliable;
        qos.history_depth = 1024;
        track_unacked(ep, b.destination, b.message, qos);
      }
      events.push_back({BundleEvent::Kind::Transmitted, std::move(b)});
    } else {
      kept.push_back(std::move(b));
    }
  }
  ep.bundles = std::move(kept);
  return events;
}

void Bus::set_filter(const NodeId& node, const NodeId& peer, bool enabled) {
  Endpoint& ep = endpoint(node);
  const bool was = ep.filtered.count(peer) > 0;
  if (enabled == was) return;
  if (enabled) {
    ep.filtered[peer];
  } else {
    // Release the backlog through the normal path.
    std::vector<Pending> backlog = std::move(ep.filtered[peer]);
    ep.filtered.erase(peer);
    for (Pending& p : backlog) {
      std::string reason;
      offer(ep, peer, p.message, p.qos, reason);
    }
  }
  sink_.emit("filter", Fields{{"node", node}, {"peer", peer}, {"enabled", enabled}});
}

bool Bus::filter_enabled(const NodeId& node, const NodeId& peer) const {
  return endpoint(node).filtered.count(peer) > 0;
}

void Bus::flush_filters() {
  for (auto& [id, ep] : endpoints_) {
    if (!ep.up) continue;
    for (auto& [peer, pending] : ep.filtered) {
      if (pending.empty()) continue;
      const std::uint64_t bw = sim_.probe_bandwidth(LinkId::of(id, peer));
      const std::uint64_t budget =
          sim_.queue_delay(id, peer) > config_.max_queue_delay_ms
              ? 0
              : bw * static_cast<std::uint64_t>(config_.filter_period_ms) / 8000;
      std::vector<FilterItem> items;
      items.reserve(pending.size());
      for (const Pending& p : pending) items.push_back({p.message, p.qos.bundle_eligible});
      const FilterResult r = filter_for_bandwidth(items, budget);

      std::vector<Pending> next;
      for (std::size_t i : r.send) {
        const Pending& p = pending[i];
        if (transmit_data(ep, peer, p.message, p.qos.reliable())) {
          if (p.qos.reliable()) track_unacked(ep, peer, p.message, p.qos);
        } else {
          next.push_back(p);
        }
      }
      for (std::size_t i : r.defer) next.push_back(pending[i]);
      for (std::size_t i : r.drop) {
        Fields f = message_fields(pending[i].message);
        f["node"] = id;
        f["dst"] = peer;
        f["reason"] = "Filtered";
        sink_.emit("publish_drop", std::move(f));
      }
      // Keep arrival order for the next round.
      std::stable_sort(next.begin(), next.end(), [](const Pending& x, const Pending& y) {
        return x.message.seq < y.message.seq;
      });
      pending = std::move(next);
    }
  }
}

void Bus::deliver_local(const NodeId& node, const Message& message) {
  sim_.schedule_at(sim_.now(), [this, node, message] {
    Endpoint& ep = endpoint(node);
    if (ep.up) accept(ep, message, node, true);
  });
}

void Bus::handle_delivery(const simnet::Delivery& d) {
  auto it = endpoints_.find(d.dst);
  if (it == endpoints_.end()) return;
  Endpoint& ep = it->second;
  if (!ep.up) {
    sink_.emit("frame_lost", Fields{{"src", d.src}, {"dst", d.dst}, {"bytes", d.frame.size()},
                                    {"reason", "NodeDown"}});
    return;
  }
  Envelope env;
  Message message;
  try {
    env = decode_envelope(d.frame);
    if (auto* data = std::get_if<DataEnvelope>(&env)) {
      message = decode_frame(data->frame);
      message.payload = decompress(topic(message.topic).compression, message.payload);
      message.origin = data->origin;
      message.seq = data->seq;
      message.created_at = data->created_at;
      message.trace_start = data->trace_start;
    }
  } catch (const Error& e) {
    sink_.emit("frame_corrupt", Fields{{"src", d.src}, {"dst", d.dst}, {"error", e.what()}});
    return;
  }

  if (const auto* ack = std::get_if<AckEnvelope>(&env)) {
    sink_.emit("frame_rx", Fields{{"src", d.src}, {"dst", d.dst},
                                  {"link", d.link.str()}, {"bytes", d.frame.size()},
                                  {"kind", "ack"}});
    ep.unacked.erase({d.src, MessageId{ack->origin, ack->seq}});
    return;
  }

  const auto& data = std::get<DataEnvelope>(env);
  sink_.emit("frame_rx", Fields{{"src", d.src}, {"dst", d.dst}, {"link", d.link.str()},
                                {"bytes", d.frame.size()}, {"kind", "data"},
                                {"topic", message.topic}});
  if (data.reliable) {
    Bytes ack = encode_envelope(AckEnvelope{message.origin, message.seq});
    const std::size_t size = ack.size();
    const auto decision = sim_.transmit(ep.id, d.src, std::move(ack));
    Fields f{{"src", ep.id}, {"dst", d.src}, {"link", d.link.str()}, {"bytes", size},
             {"kind", "ack"}, {"critical", true}};
    if (std::holds_alternative<simnet::Dropped>(decision)) {
      f["reason"] = std::string(
          simnet::to_string(std::get<simnet::Dropped>(decision).reason));
      if (std::get<simnet::Dropped>(decision).reason == simnet::FrameDrop::Loss) {
        sink_.emit("frame_tx", f);
      }
      sink_.emit("frame_drop", std::move(f));
    } else {
      f["deliver_at"] = std::get<simnet::Scheduled>(decision).at;
      sink_.emit("frame_tx", std::move(f));
    }
  }
  accept(ep, message, d.src, false);
}

void Bus::accept(Endpoint& ep, const Message& message, const NodeId& from, bool local) {
  if (!ep.seen.insert(message.id()).second) {
    sink_.emit("msg_duplicate", Fields{{"node", ep.id}, {"origin", message.origin},
                                       {"msg_seq", message.seq}});
    return;
  }
  auto& cache = ep.cache[message.topic];
  cache.push_back(message);
  while (cache.size() > topic(message.topic).qos.history_depth) cache.pop_front();

  if (!is_reserved_topic(message.topic)) {
    Fields f = message_fields(message);
    f["node"] = ep.id;
    f["from"] = from;
    f["local"] = local;
    f["latency_ms"] = sim_.now() - message.created_at;
    sink_.emit("msg_deliver", std::move(f));
  }
  if (receive_) receive_(ep.id, message);
}

const std::deque<Message>& Bus::cache(const NodeId& node, const std::string& topic) const {
  static const std::deque<Message> kEmpty;
  const Endpoint& ep = endpoint(node);
  auto it = ep.cache.find(topic);
  return it == ep.cache.end() ? kEmpty : it->second;
}

std::size_t Bus::pending_bundles(const NodeId& node) const {
  return endpoint(node).bundles.size();
}

std::size_t Bus::unacked(const NodeId& node) const { return endpoint(node).unacked.size(); }

std::size_t Bus::filter_backlog(const NodeId& node) const {
  std::size_t n = 0;
  for (const auto& [_, pending] : endpoint(node).filtered) n += pending.size();
  return n;
}

}  // namespace edgetb::distrib
