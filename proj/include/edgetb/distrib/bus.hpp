#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgetb/common/event_sink.hpp"
#include "edgetb/distrib/connection_manager.hpp"
#include "edgetb/distrib/message.hpp"
#include "edgetb/simnet/simulator.hpp"

namespace edgetb::distrib {

struct TopicConfig {
  QosProfile qos;
  std::string compression = "identity";
  bool critical = false;
};

enum class Outcome { Sent, Bundled, Queued, Dropped };

std::string_view to_string(Outcome outcome);

struct DestinationOutcome {
  NodeId destination;
  Outcome outcome = Outcome::Dropped;
  std::string reason;  // set for Dropped
};

struct PublishResult {
  MessageId id;
  std::vector<DestinationOutcome> outcomes;
  bool local_delivery = false;
  bool unknown_topic = false;
};

struct BundleEvent {
  enum class Kind { Transmitted, Expired } kind;
  Bundle bundle;
};

struct BusConfig {
  // Budget rule: a frame is only offered to a link whose FIFO backlog would
  // delay it by at most this much.
  SimTime max_queue_delay_ms = 2000;
  SimTime retransmit_cap_ms = 2000;
  SimTime filter_period_ms = 100;
};

// Reserved control-plane topics. They bypass posture gating.
inline constexpr std::string_view kHeartbeatTopic = "_orch.hb";
inline constexpr std::string_view kCommandTopic = "_orch.cmd";
inline constexpr std::string_view kStoreSyncTopic = "_store.sync";
inline constexpr std::string_view kRevokeTopic = "_sec.revoke";

bool is_reserved_topic(std::string_view topic);

// Brokerless data distribution for every node in the simulation. Each node
// has its own endpoint: sequence counter, connection manager, unacknowledged
// history, bundle custody store, dedup set and last-value cache. Frames go
// straight from publisher to subscriber over one simulated link.
class Bus {
 public:
  using ReceiveHandler = std::function<void(const NodeId& node, const Message&)>;
  // Returns a denial reason when `node` may not emit `message` right now.
  using EgressGate =
      std::function<std::optional<std::string>(const NodeId& node, const Message&)>;

  Bus(simnet::Simulator& sim, EventSink& sink, BusConfig config = {});

  void add_node(const NodeId& node);
  bool has_node(const NodeId& node) const { return endpoints_.count(node) > 0; }
  void set_node_up(const NodeId& node, bool up);
  bool node_up(const NodeId& node) const;

  void set_topic(const std::string& topic, TopicConfig config);
  const TopicConfig& topic(const std::string& topic) const;

  void subscribe(const NodeId& node, const std::string& topic);
  void unsubscribe(const NodeId& node, const std::string& topic);
  const std::set<std::string>& subscriptions(const NodeId& node) const;

  // Feeds the node's connection manager a new membership view.
  void update_view(const NodeId& node, const SubscriptionMap& subscriptions,
                   const std::set<NodeId>& live);
  const ConnectionManager& connections(const NodeId& node) const;

  PublishResult publish(const NodeId& node, Message message);
  PublishResult publish(const NodeId& node, Message message, const QosProfile& qos);

  // Point-to-point send to explicit destinations (control-plane traffic).
  PublishResult send_to(const NodeId& node, const std::set<NodeId>& destinations,
                        Message message, const QosProfile& qos);

  void handle_delivery(const simnet::Delivery& delivery);

  // Expires then transmits the node's custody bundles whose links are up.
  std::vector<BundleEvent> forward_bundles(const NodeId& node);

  void set_filter(const NodeId& node, const NodeId& peer, bool enabled);
  bool filter_enabled(const NodeId& node, const NodeId& peer) const;
  void flush_filters();

  const std::deque<Message>& cache(const NodeId& node, const std::string& topic) const;
  std::size_t pending_bundles(const NodeId& node) const;
  std::size_t unacked(const NodeId& node) const;
  std::size_t filter_backlog(const NodeId& node) const;

  void on_receive(ReceiveHandler handler) { receive_ = std::move(handler); }
  void set_gate(EgressGate gate) { gate_ = std::move(gate); }

 private:
  struct Unacked {
    Message message;
    QosProfile qos;
    int attempts = 0;
  };
  struct Pending {
    Message message;
    QosProfile qos;
  };
  struct Endpoint {
    NodeId id;
    bool up = true;
    std::uint64_t next_seq = 1;
    ConnectionManager connections;
    std::set<std::string> subscriptions;
    std::map<std::pair<NodeId, MessageId>, Unacked> unacked;
    std::map<std::string, std::deque<MessageId>> history;
    std::vector<Bundle> bundles;
    std::set<MessageId> seen;
    std::map<std::string, std::deque<Message>> cache;
    std::map<NodeId, std::vector<Pending>> filtered;  // peer -> pending
  };

  Endpoint& endpoint(const NodeId& node);
  const Endpoint& endpoint(const NodeId& node) const;
  PublishResult dispatch(Endpoint& ep, const std::set<NodeId>& destinations,
                         bool deliver_locally, Message message, const QosProfile& qos);
  Outcome offer(Endpoint& ep, const NodeId& dst, const Message& message,
                const QosProfile& qos, std::string& reason);
  // Returns false when the frame never left (gate, link down).
  bool transmit_data(Endpoint& ep, const NodeId& dst, const Message& message,
                     bool reliable, std::string* reason = nullptr);
  bool link_usable(const NodeId& src, const NodeId& dst) const;
  void track_unacked(Endpoint& ep, const NodeId& dst, const Message& message,
                     const QosProfile& qos);
  void schedule_retransmit(const NodeId& node, const NodeId& dst, const MessageId& id,
                           int attempt);
  void on_retransmit(const NodeId& node, const NodeId& dst, const MessageId& id);
  void store_bundle(Endpoint& ep, const NodeId& dst, const Message& message,
                    const QosProfile& qos);
  void deliver_local(const NodeId& node, const Message& message);
  void accept(Endpoint& ep, const Message& message, const NodeId& from, bool local);
  SimTime retransmit_timeout(const NodeId& src, const NodeId& dst, const Message& m,
                             int attempt) const;

  simnet::Simulator& sim_;
  EventSink& sink_;
  BusConfig config_;
  std::map<NodeId, Endpoint> endpoints_;
  std::map<std::string, TopicConfig> topics_;
  TopicConfig default_topic_;
  ReceiveHandler receive_;
  EgressGate gate_;
};

}  // namespace edgetb::distrib
