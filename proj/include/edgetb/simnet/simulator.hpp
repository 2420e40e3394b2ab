#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <variant>
#include <vector>

#include "edgetb/common/types.hpp"

namespace edgetb::simnet {

// DDIL link state. "Denied" and "down" are both modelled as up=false, and a
// link with zero bandwidth carries nothing.
struct LinkProfile {
  std::uint64_t bandwidth_bps = 0;
  SimTime latency_ms = 0;
  double loss_prob = 0.0;
  bool up = true;

  bool carries_traffic() const { return up && bandwidth_bps > 0; }
  bool operator==(const LinkProfile&) const = default;
};

void validate(const LinkProfile& profile);

struct LinkChange {
  SimTime at_ms = 0;
  LinkProfile profile;
};

struct LinkSchedule {
  LinkId link;
  std::vector<LinkChange> changes;  // strictly increasing at_ms
};

struct SimClock {
  SimTime now_ms = 0;
  std::uint64_t seq = 0;
  std::uint64_t seed = 0;
};

enum class FrameDrop { LinkDown, Loss };

std::string_view to_string(FrameDrop reason);

struct Scheduled {
  SimTime at;
};
struct Dropped {
  FrameDrop reason;
};
using DeliveryDecision = std::variant<Scheduled, Dropped>;

struct Delivery {
  LinkId link;
  NodeId src;
  NodeId dst;
  Bytes frame;
  SimTime sent_at = 0;
  SimTime at = 0;
  std::uint64_t seq = 0;
};

// Deterministic discrete-event network: point-to-point full-duplex FIFO
// links, integer-ms time, (time, seq) total event order. The simulator is the
// single source of simulated time; timers scheduled here drive every other
// module.
class Simulator {
 public:
  using DeliveryHandler = std::function<void(const Delivery&)>;
  using LinkListener = std::function<void(const LinkId&, const LinkProfile& before,
                                          const LinkProfile& after)>;

  explicit Simulator(std::uint64_t seed = 0);

  void add_node(const NodeId& id);
  bool has_node(const NodeId& id) const { return nodes_.count(id) > 0; }
  const std::set<NodeId>& nodes() const { return nodes_; }

  void add_link(const NodeId& a, const NodeId& b, const LinkProfile& profile);
  bool has_link(const NodeId& a, const NodeId& b) const;
  std::vector<LinkId> links() const;
  std::vector<NodeId> neighbors(const NodeId& node) const;

  // Effective profile: base profile with partition cuts applied.
  LinkProfile profile(const LinkId& link) const;
  LinkProfile base_profile(const LinkId& link) const;

  SimTime now() const { return now_; }
  SimClock clock() const { return SimClock{now_, next_seq_, seed_}; }

  // Offers a frame to the src->dst direction at time `at` (>= now). Frames
  // serialize FIFO per direction; the profile in effect when serialization
  // starts (including already-scheduled changes) decides loss and timing.
  DeliveryDecision transmit(const NodeId& src, const NodeId& dst, Bytes frame,
                            SimTime at);
  DeliveryDecision transmit(const NodeId& src, const NodeId& dst, Bytes frame) {
    return transmit(src, dst, std::move(frame), now_);
  }

  // Runs every event with time <= until, then sets the clock to `until`.
  std::vector<Delivery> advance(SimTime until);

  void apply_schedule(const LinkSchedule& schedule);
  void set_profile(const LinkId& link, const LinkProfile& profile);

  // Bits delivered on the link (both directions) during (now - window, now],
  // divided by the window in seconds.
  double measure_bandwidth(const LinkId& link, SimTime window_ms) const;

  // Capacity probe: the effective bandwidth of the link right now, 0 if down.
  std::uint64_t probe_bandwidth(const LinkId& link) const;

  // Time until a frame offered now on src->dst would start serializing.
  SimTime queue_delay(const NodeId& src, const NodeId& dst) const;

  void partition(const std::vector<std::set<NodeId>>& groups);
  void heal();
  bool partitioned() const { return !cut_.empty(); }

  std::uint64_t schedule_at(SimTime at, std::function<void()> fn);

  void on_delivery(DeliveryHandler handler) { delivery_handler_ = std::move(handler); }
  void on_link_change(LinkListener listener) { link_listener_ = std::move(listener); }

  std::size_t pending_events() const { return queue_.size(); }

 private:
  struct Direction {
    SimTime busy_until = 0;
    std::deque<std::pair<SimTime, std::uint64_t>> delivered;  // (at, bits)
  };

  struct Link {
    LinkProfile base;
    std::map<SimTime, LinkProfile> pending;  // scheduled, not yet applied
    std::mt19937_64 rng;
    Direction forward;   // a -> b
    Direction backward;  // b -> a
  };

  struct DeliverEvent {
    Delivery delivery;
  };
  struct ProfileEvent {
    LinkId link;
    LinkProfile profile;
  };
  struct TimerEvent {
    std::function<void()> fn;
  };

  struct Event {
    SimTime time;
    std::uint64_t seq;
    std::variant<DeliverEvent, ProfileEvent, TimerEvent> body;
  };
  struct Later {
    bool operator()(const Event& x, const Event& y) const {
      return x.time != y.time ? x.time > y.time : x.seq > y.seq;
    }
  };

  Link& link_ref(const LinkId& id);
  const Link& link_ref(const LinkId& id) const;
  LinkProfile effective(const LinkId& id, const LinkProfile& base) const;
  LinkProfile profile_at(const LinkId& id, SimTime at) const;
  void push(SimTime time, decltype(Event::body) body);
  void replace_base(const LinkId& id, const LinkProfile& profile);
  void notify(const LinkId& id, const LinkProfile& before);
  void prune(Direction& dir) const;

  std::uint64_t seed_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::set<NodeId> nodes_;
  std::map<LinkId, Link> links_;
  std::set<LinkId> cut_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  DeliveryHandler delivery_handler_;
  LinkListener link_listener_;
};

// Serialization delay of `bits` at `bandwidth_bps`, rounded up to whole ms.
SimTime serialization_ms(std::uint64_t bits, std::uint64_t bandwidth_bps);

}  // namespace edgetb::simnet
