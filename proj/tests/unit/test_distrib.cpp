#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "edgetb/common/checksum.hpp"
#include "edgetb/common/error.hpp"
#include "edgetb/distrib/bus.hpp"
#include "edgetb/distrib/compression.hpp"
#include "edgetb/distrib/envelope.hpp"
#include "edgetb/distrib/filter.hpp"
#include "edgetb/distrib/frame.hpp"
#include "support.hpp"

namespace edgetb::distrib {
namespace {

std::uint32_t crc_oracle(const Bytes& data) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t byte : data) {
    crc ^= byte;
    for (int k = 0; k < 8; ++k) crc = (crc & 1u) ? (crc >> 1) ^ 0xEDB88320u : crc >> 1;
  }
  return ~crc;
}

Errc decode_error(const Bytes& bytes) {
  try {
    decode_frame(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decoded without error";
  return Errc::InvalidArgument;
}

// ------------------------------------------------------------------ frame

TEST(Frame, EmptyMessageLayout) {
  const Bytes head{0xED, 0x01, 0x00, 0x00, 0x00};
  Bytes expect = head;
  const std::uint32_t crc = crc_oracle(head);
  for (int i = 0; i < 4; ++i) expect.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  EXPECT_EQ(encode_frame(Message{}), expect);
}

TEST(Frame, PayloadLengthVarint) {
  Message m;
  m.topic = "t";
  m.payload.assign(300, 7);
  const Bytes f = encode_frame(m);
  // magic, version, len(1), 't', priority, then payload_len.
  EXPECT_EQ(f[5], 0xAC);
  EXPECT_EQ(f[6], 0x02);
  EXPECT_EQ(f.size(), encoded_frame_size(m));
}

TEST(Frame, RoundTripRandomized) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Message m = test::random_message(rng);
    ASSERT_EQ(decode_frame(encode_frame(m)), m);
  }
}

TEST(Frame, FlippedPayloadByteIsBadChecksum) {
  Message m;
  m.topic = "alerts";
  m.priority = 1;
  m.payload = {1, 2, 3, 4};
  Bytes f = encode_frame(m);
  f[f.size() - 6] ^= 0xFF;
  EXPECT_EQ(decode_error(f), Errc::BadChecksum);
}

TEST(Frame, EmptyInputIsTruncated) { EXPECT_EQ(decode_error({}), Errc::Truncated); }

TEST(Frame, HeaderErrors) {
  Bytes f = encode_frame(Message{"x", 0, {9}});
  Bytes bad_magic = f;
  bad_magic[0] = 0xEE;
  EXPECT_EQ(decode_error(bad_magic), Errc::BadMagic);
  Bytes bad_version = f;
  bad_version[1] = 0x02;
  EXPECT_EQ(decode_error(bad_version), Errc::BadVersion);
  Bytes trailing = f;
  trailing.push_back(0);
  EXPECT_THROW(decode_frame(trailing), Error);
}

TEST(Frame, EverySingleBitFlipRejected) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const Bytes f = encode_frame(test::random_message(rng, 64));
    for (std::size_t bit = 0; bit < f.size() * 8; ++bit) {
      Bytes c = f;
      c[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      ASSERT_THROW(decode_frame(c), Error) << "bit " << bit;
    }
  }
}

TEST(Frame, PriorityOutOfRangeRejected) {
  EXPECT_THROW(encode_frame(Message{"t", 4, {}}), Error);
}

TEST(Envelope, RoundTrip) {
  DataEnvelope d{true, "n1", 42, 1000, 900, {1, 2, 3}};
  const auto back = std::get<DataEnvelope>(decode_envelope(encode_envelope(d)));
  EXPECT_EQ(back.reliable, true);
  EXPECT_EQ(back.origin, "n1");
  EXPECT_EQ(back.seq, 42u);
  EXPECT_EQ(back.created_at, 1000);
  EXPECT_EQ(back.trace_start, 900);
  EXPECT_EQ(back.frame, d.frame);
  const auto ack = std::get<AckEnvelope>(decode_envelope(encode_envelope(AckEnvelope{"n2", 7})));
  EXPECT_EQ(ack.origin, "n2");
  EXPECT_EQ(ack.seq, 7u);
}

TEST(Compression, DeflateRoundTrip) {
  const Bytes data(4000, 'z');
  const Bytes c = compress("deflate", data);
  EXPECT_LT(c.size(), data.size());
  EXPECT_EQ(decompress("deflate", c), data);
  EXPECT_EQ(compress("identity", data), data);
  EXPECT_FALSE(known_compressor("lz77"));
}

// ------------------------------------------------------------ connections

TEST(Connections, NoSubscribers) { EXPECT_TRUE(connect_services({}, {"a", "b"}).empty()); }

TEST(Connections, DirectSingleHop) {
  const auto table = connect_services({{"T", {"b", "c"}}}, {"a", "b", "c"});
  EXPECT_EQ(table.at({"a", "T"}), (std::set<NodeId>{"b", "c"}));
  EXPECT_EQ(table.at({"b", "T"}), (std::set<NodeId>{"c"}));
}

TEST(Connections, DownSubscriberOmitted) {
  ConnectionManager cm("a");
  const SubscriptionMap subs{{"T", {"b", "c"}}};
  cm.update(subs, {"a", "b", "c"});
  EXPECT_EQ(cm.destinations("T"), (std::set<NodeId>{"b", "c"}));
  cm.update(subs, {"a", "c"});
  EXPECT_EQ(cm.destinations("T"), (std::set<NodeId>{"c"}));
  EXPECT_EQ(cm.dormant_destinations("T"), (std::set<NodeId>{"b"}));
}

// ----------------------------------------------------------------- filter

std::vector<FilterItem> sized_items(const std::vector<std::pair<std::uint8_t, std::size_t>>& spec,
                                    bool eligible = false) {
  std::vector<FilterItem> out;
  for (const auto& [prio, frame_size] : spec) {
    Message m;
    m.topic = "t";
    m.priority = prio;
    const std::size_t overhead = encoded_frame_size(m);
    m.payload.assign(frame_size - overhead - (frame_size - overhead >= 128 ? 1 : 0), 0);
    EXPECT_EQ(encoded_frame_size(m), frame_size);
    out.push_back({m, eligible});
  }
  return out;
}

TEST(Filter, ZeroBudgetSendsNothing) {
  const auto r = filter_for_bandwidth(sized_items({{0, 50}, {1, 50}}), 0);
  EXPECT_TRUE(r.send.empty());
  EXPECT_EQ(r.drop.size(), 2u);
}

TEST(Filter, PriorityFirst) {
  auto items = sized_items({{1, 100}, {0, 100}});
  items[0].bundle_eligible = true;
  const auto r = filter_for_bandwidth(items, 100);
  EXPECT_EQ(r.send, (std::vector<std::size_t>{1}));
  EXPECT_EQ(r.defer, (std::vector<std::size_t>{0}));
  EXPECT_TRUE(r.drop.empty());
}

TEST(Filter, ExactFitOfFirstThree) {
  const auto r = filter_for_bandwidth(sized_items({{2, 40}, {2, 30}, {2, 30}, {2, 20}, {2, 10}}), 100);
  EXPECT_EQ(r.send, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(r.drop, (std::vector<std::size_t>{3, 4}));
}

TEST(Filter, PriorityMonotonicityProperty) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<FilterItem> items;
    for (std::size_t i = 0; i < 1 + rng() % 12; ++i) {
      Message m;
      m.topic = "t";
      m.priority = static_cast<std::uint8_t>(rng() % 4);
      m.payload.assign(rng() % 200, 0);
      items.push_back({m, (rng() & 1) != 0});
    }
    const std::uint64_t budget = rng() % 800;
    const auto r = filter_for_bandwidth(items, budget);
    ASSERT_EQ(r.send.size() + r.defer.size() + r.drop.size(), items.size());
    std::uint64_t used = 0;
    for (auto i : r.send) used += encoded_frame_size(items[i].message);
    ASSERT_LE(used, budget);
    std::vector<std::size_t> unsent = r.defer;
    unsent.insert(unsent.end(), r.drop.begin(), r.drop.end());
    for (auto u : unsent) {
      ASSERT_EQ(items[u].bundle_eligible, std::count(r.defer.begin(), r.defer.end(), u) == 1);
      for (auto s : r.send) {
        // A lower-priority message only goes ahead when the skipped one could
        // not fit in what was left at its turn.
        if (items[s].message.priority > items[u].message.priority) {
          ASSERT_GT(encoded_frame_size(items[u].message), budget - used + encoded_frame_size(items[s].message));
        }
      }
    }
    ASSERT_EQ(filter_for_bandwidth(items, budget).send, r.send);
  }
}

// -------------------------------------------------------------------- bus

struct Recorder final : EventSink {
  std::vector<std::pair<std::string, Fields>> events;
  void emit(std::string_view type, Fields f) override { events.emplace_back(std::string(type), std::move(f)); }
  std::size_t count(std::string_view type) const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                  [&](const auto& e) { return e.first == type; }));
  }
};

struct Net {
  simnet::Simulator sim{3};
  Recorder log;
  Bus bus{sim, log};
  std::vector<std::pair<NodeId, Message>> received;

  explicit Net(const std::vector<NodeId>& nodes) {
    for (const auto& n : nodes) {
      sim.add_node(n);
      bus.add_node(n);
    }
    sim.on_delivery([this](const simnet::Delivery& d) { bus.handle_delivery(d); });
    bus.on_receive([this](const NodeId& n, const Message& m) { received.emplace_back(n, m); });
  }
  void views() {
    SubscriptionMap subs;
    std::set<NodeId> live;
    for (const auto& n : sim.nodes()) {
      live.insert(n);
      for (const auto& t : bus.subscriptions(n)) subs[t].insert(n);
    }
    for (const auto& n : sim.nodes()) bus.update_view(n, subs, live);
  }
  std::size_t received_by(const NodeId& n) const {
    return static_cast<std::size_t>(
        std::count_if(received.begin(), received.end(), [&](const auto& r) { return r.first == n; }));
  }
};

Message msg(const std::string& topic, std::size_t size = 16, std::uint8_t prio = 2) {
  return Message{topic, prio, Bytes(size, 1)};
}

TEST(Bus, SentToAllDestinations) {
  Net net({"a", "b", "c"});
  net.sim.add_link("a", "b", {1'000'000, 5, 0.0, true});
  net.sim.add_link("a", "c", {1'000'000, 5, 0.0, true});
  net.bus.subscribe("b", "T");
  net.bus.subscribe("c", "T");
  net.views();
  const auto r = net.bus.publish("a", msg("T"));
  ASSERT_EQ(r.outcomes.size(), 2u);
  for (const auto& o : r.outcomes) EXPECT_EQ(o.outcome, Outcome::Sent);
  net.sim.advance(100);
  EXPECT_EQ(net.received_by("b"), 1u);
  EXPECT_EQ(net.received_by("c"), 1u);
  EXPECT_EQ(net.received[0].second.payload, Bytes(16, 1));
}

TEST(Bus, LinkDownBundleEligibleIsBundled) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {1'000'000, 5, 0.0, false});
  net.bus.subscribe("b", "T");
  net.views();
  QosProfile qos;
  qos.bundle_eligible = true;
  const auto r = net.bus.publish("a", msg("T"), qos);
  ASSERT_EQ(r.outcomes.size(), 1u);
  EXPECT_EQ(r.outcomes[0].outcome, Outcome::Bundled);
  EXPECT_EQ(net.bus.pending_bundles("a"), 1u);
}

TEST(Bus, LinkDownBestEffortDropped) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {1'000'000, 5, 0.0, false});
  net.bus.subscribe("b", "T");
  net.views();
  const auto r = net.bus.publish("a", msg("T"));
  ASSERT_EQ(r.outcomes.size(), 1u);
  EXPECT_EQ(r.outcomes[0].outcome, Outcome::Dropped);
  EXPECT_EQ(r.outcomes[0].reason, "LinkDown");
}

TEST(Bus, BundleForwardedBeforeTtl) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {1'000'000, 5, 0.0, false});
  net.bus.subscribe("b", "T");
  net.views();
  QosProfile qos;
  qos.bundle_eligible = true;
  qos.bundle_ttl_ms = 1000;
  net.bus.publish("a", msg("T"), qos);
  net.sim.advance(500);
  net.sim.set_profile(LinkId::of("a", "b"), {1'000'000, 5, 0.0, true});
  const auto ev = net.bus.forward_bundles("a");
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, BundleEvent::Kind::Transmitted);
  net.sim.advance(600);
  EXPECT_EQ(net.received_by("b"), 1u);
  EXPECT_TRUE(net.bus.forward_bundles("a").empty());
}

TEST(Bundle, ExpiredNeverTransmitted) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {1'000'000, 5, 0.0, false});
  net.bus.subscribe("b", "T");
  net.views();
  QosProfile qos;
  qos.bundle_eligible = true;
  qos.bundle_ttl_ms = 1000;
  net.bus.publish("a", msg("T"), qos);
  net.sim.advance(2000);
  net.sim.set_profile(LinkId::of("a", "b"), {1'000'000, 5, 0.0, true});
  const auto ev = net.bus.forward_bundles("a");
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, BundleEvent::Kind::Expired);
  net.sim.advance(5000);
  EXPECT_EQ(net.received_by("b"), 0u);
  EXPECT_EQ(net.log.count("bundle_expired"), 1u);
}

TEST(Bundle, NoPendingBundles) {
  Net net({"a"});
  EXPECT_TRUE(net.bus.forward_bundles("a").empty());
}

TEST(Bus, ReliableExactlyOnceOverLossyLink) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {200'000, 10, 0.4, true});
  net.bus.subscribe("b", "T");
  net.views();
  QosProfile qos;
  qos.reliability = Reliability::Reliable;
  qos.history_depth = 1000;
  for (int i = 0; i < 100; ++i) {
    net.sim.advance(i * 20);
    net.bus.publish("a", msg("T", 32), qos);
  }
  net.sim.advance(120'000);
  ASSERT_EQ(net.received_by("b"), 100u);
  std::set<std::uint64_t> seqs;
  for (const auto& [n, m] : net.received) seqs.insert(m.seq);
  EXPECT_EQ(seqs.size(), 100u);
  EXPECT_EQ(net.bus.unacked("a"), 0u);
  EXPECT_GT(net.log.count("retransmit"), 0u);
}

TEST(Bus, ReliableQueuedUntilLinkReturns) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {100'000, 10, 0.0, false});
  net.bus.subscribe("b", "T");
  net.views();
  QosProfile qos;
  qos.reliability = Reliability::Reliable;
  const auto r = net.bus.publish("a", msg("T"), qos);
  EXPECT_EQ(r.outcomes[0].outcome, Outcome::Queued);
  net.sim.apply_schedule({LinkId::of("a", "b"), {{3000, {100'000, 10, 0.0, true}}}});
  net.sim.advance(10'000);
  EXPECT_EQ(net.received_by("b"), 1u);
}

TEST(Bus, CompressedTopicDeliversOriginalPayload) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {1'000'000, 1, 0.0, true});
  TopicConfig cfg;
  cfg.compression = "deflate";
  net.bus.set_topic("T", cfg);
  net.bus.subscribe("b", "T");
  net.views();
  Message m{"T", 1, Bytes(2000, 'q')};
  net.bus.publish("a", m);
  net.sim.advance(1000);
  ASSERT_EQ(net.received_by("b"), 1u);
  EXPECT_EQ(net.received[0].second.payload, m.payload);
}

TEST(Bus, GateDeniesNonReservedTraffic) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {1'000'000, 1, 0.0, true});
  net.bus.subscribe("b", "T");
  net.views();
  net.bus.set_gate([](const NodeId&, const Message&) { return std::optional<std::string>("lockdown"); });
  const auto r = net.bus.publish("a", msg("T"));
  EXPECT_EQ(r.outcomes[0].reason, "PostureDenied");
  net.bus.send_to("a", {"b"}, msg(std::string(kHeartbeatTopic)), QosProfile{});
  net.sim.advance(100);
  EXPECT_EQ(net.log.count("PostureDenied"), 1u);
  ASSERT_EQ(net.received_by("b"), 1u);
  EXPECT_EQ(net.received[0].second.topic, kHeartbeatTopic);
}

TEST(Bus, FilterPassesHighPriorityFirst) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {8000, 1, 0.0, true});  // 100 bytes per 100 ms tick
  net.bus.subscribe("b", "T");
  net.views();
  net.bus.set_filter("a", "b", true);
  net.bus.publish("a", msg("T", 60, 3));
  net.bus.publish("a", msg("T", 60, 0));
  net.bus.flush_filters();
  net.sim.advance(1000);
  ASSERT_EQ(net.received_by("b"), 1u);
  EXPECT_EQ(net.received[0].second.priority, 0);
}

TEST(Bus, DuplicateDeliveryIgnored) {
  Net net({"a", "b"});
  net.sim.add_link("a", "b", {1'000'000, 1, 0.0, true});
  net.bus.subscribe("b", "T");
  net.views();
  net.bus.publish("a", msg("T"));
  net.sim.advance(10);
  // Replay the same frame.
  simnet::Delivery d;
  d.link = LinkId::of("a", "b");
  d.src = "a";
  d.dst = "b";
  Message m = msg("T");
  m.origin = "a";
  m.seq = 1;
  d.frame = encode_envelope(DataEnvelope{false, "a", 1, 0, 0, encode_frame(m)});
  net.bus.handle_delivery(d);
  EXPECT_EQ(net.received_by("b"), 1u);
  EXPECT_EQ(net.log.count("msg_duplicate"), 1u);
}

}  // namespace
}  // namespace edgetb::distrib
