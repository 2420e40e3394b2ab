#include "edgetb/control/world.hpp"

#include <algorithm>
#include <cmath>

#include "edgetb/common/base64.hpp"
#include "edgetb/common/checksum.hpp"
#include "edgetb/orchestrator/triggers.hpp"

namespace edgetb::control {

using distrib::Message;
using orch::PlacedInstance;
using orch::Placement;

namespace {

constexpr std::string_view kPlacementPrefix = "_orch/placement/";
constexpr std::string_view kPipelinePrefix = "_orch/pipeline/";
constexpr SimTime kResendAfterMs = 3000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (std::size_t i = 0; i < n; i += 8) {
    std::uint64_t x = rng();
    for (std::size_t k = 0; k < 8 && i + k < n; ++k) out[i + k] = static_cast<std::uint8_t>(x >> (8 * k));
  }
  return out;
}

json adv_to_json(const orch::Advertisement& a) {
  json inst = json::array();
  for (const auto& r : a.instances) inst.push_back({r.instance_id, r.pipeline, r.stage, r.depth});
  return json{{"cc", a.cpu_capacity}, {"mc", a.mem_capacity}, {"cf", a.cpu_free},
              {"mf", a.mem_free},     {"bp", a.battery_pct},  {"in", std::move(inst)},
              {"sub", a.subscriptions}};
}

orch::Advertisement adv_from_json(const json& j) {
  orch::Advertisement a;
  a.cpu_capacity = j.at("cc").get<double>();
  a.mem_capacity = j.at("mc").get<double>();
  a.cpu_free = j.at("cf").get<double>();
  a.mem_free = j.at("mf").get<double>();
  a.battery_pct = j.at("bp").get<double>();
  for (const auto& r : j.at("in")) {
    a.instances.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>(),
                           r.at(2).get<std::string>(), r.at(3).get<std::size_t>()});
  }
  a.subscriptions = j.at("sub").get<std::set<std::string>>();
  return a;
}

json digest_to_json(const store::Digest& d) {
  json out = json::object();
  for (const auto& [key, vv] : d) out[key] = vv.counters();
  return out;
}

store::Digest digest_from_json(const json& j) {
  store::Digest d;
  for (const auto& [key, counters] : j.items()) {
    store::VersionVector vv;
    for (const auto& [node, c] : counters.items()) vv.set(node, c.get<std::uint64_t>());
    d[key] = vv;
  }
  return d;
}

json entries_to_json(const std::vector<store::Entry>& entries) {
  json out = json::array();
  for (const auto& e : entries) out.push_back(base64_encode(store::encode_entry(e)));
  return out;
}

std::vector<store::Entry> entries_from_json(const json& j) {
  std::vector<store::Entry> out;
  for (const auto& item : j) {
    auto bytes = base64_decode(item.get<std::string>());
    if (!bytes) throw Error(Errc::Malformed, "entry encoding");
    std::size_t pos = 0;
    out.push_back(store::decode_entry(*bytes, pos));
  }
  return out;
}

int replica_index(const std::string& id) {
  const auto hash = id.rfind('#');
  if (hash == std::string::npos) return -1;
  try {
    return std::stoi(id.substr(hash + 1));
  } catch (const std::exception&) {
    return -1;
  }
}

}  // namespace

struct World::NodeRt {
  explicit NodeRt(const node::NodeSpec& spec, orch::MembershipConfig membership,
                  orch::RebalanceConfig rebalance)
      : state(spec), replica(spec.id), tracker(membership), rebalancer(rebalance) {}

  const NodeId& id() const { return state.spec.id; }
  bool up() const { return state.up(); }

  node::NodeState state;
  store::Replica replica;
  orch::MembershipTracker tracker;
  std::map<NodeId, std::set<std::string>> known_subs;  // last advertised per peer
  std::map<NodeId, orch::Advertisement> last_adv;
  security::SecurityPosture posture;
  security::RevocationSet revocations;
  std::vector<std::string> tokens;  // names of tokens held
  std::size_t sync_cursor = 0;

  // Orchestrator state, meaningful while leading.
  bool leading = false;
  Placement placement;
  std::map<std::string, PipelineDeploy> pipelines;
  orch::Rebalancer rebalancer;
  std::set<NodeId> battery_latched;
  std::map<std::string, SimTime> last_sent;
  std::map<std::string, int> next_replica;
  std::set<std::string> reported_failures;
};

World::World(Scenario scenario, RunOptions options)
    : scenario_(std::move(scenario)),
      options_(options),
      seed_(options.seed.value_or(scenario_.seed)),
      duration_(options.duration_ms.value_or(scenario_.duration_ms)),
      rebalance_(options.rebalance.value_or(scenario_.settings.rebalance)),
      sim_(seed_),
      bus_(sim_, log_, scenario_.settings.bus) {
  log_.set_clock([this] { return sim_.now(); });
  log_.tee(options_.log_out);
  const Settings& cfg = scenario_.settings;

  for (const auto& spec : scenario_.nodes) {
    sim_.add_node(spec.id);
    bus_.add_node(spec.id);
    nodes_.emplace(spec.id, std::make_unique<NodeRt>(spec, cfg.membership, cfg.rebalancer));
  }
  for (const auto& l : scenario_.links) {
    sim_.add_link(l.a, l.b, l.profile);
    if (!l.schedule.empty()) sim_.apply_schedule({LinkId::of(l.a, l.b), l.schedule});
  }
  for (const auto& t : scenario_.topics) bus_.set_topic(t.name, t.config);

  auto control_topic = [&](std::string_view name, bool reliable, std::string compression) {
    distrib::TopicConfig c;
    c.qos.reliability = reliable ? distrib::Reliability::Reliable : distrib::Reliability::BestEffort;
    c.qos.history_depth = reliable ? 1024 : 1;
    c.compression = std::move(compression);
    c.critical = true;
    bus_.set_topic(std::string(name), c);
  };
  control_topic(distrib::kHeartbeatTopic, false, "deflate");
  control_topic(distrib::kCommandTopic, true, "deflate");
  control_topic(distrib::kStoreSyncTopic, false, "deflate");
  control_topic(distrib::kRevokeTopic, true, "identity");

  std::map<std::string, security::SigningKey> keys;
  for (const auto& k : scenario_.security.keys) {
    keys.emplace(k.id, security::SigningKey::from_hex(k.id, k.seed_hex));
  }
  for (const auto& id : scenario_.security.trust_roots) roots_[id] = keys.at(id).public_key();
  for (const auto& t : scenario_.security.tokens) {
    tokens_.emplace(t.name, security::issue_token(keys.at(t.issuer), roots_, t.subject, t.rights,
                                                  t.issued_at, t.expires_at));
    rt(t.holder).tokens.push_back(t.name);
  }

  for (const auto& s : scenario_.sinks) {
    bus_.subscribe(s.node, s.topic);
    sinks_.emplace(s.node, s.topic);
  }
  for (const auto& p : scenario_.pipelines) sink_pipeline_[p.spec.sink_topic] = p.spec.id;

  sim_.on_delivery([this](const simnet::Delivery& d) { bus_.handle_delivery(d); });
  bus_.on_receive([this](const NodeId& node, const Message& m) { on_receive(node, m); });
  bus_.set_gate([this](const NodeId& node, const Message& m) { return gate(node, m); });
  sim_.on_link_change([this](const LinkId& link, const simnet::LinkProfile& before,
                             const simnet::LinkProfile& after) {
    Fields f{{"link", link.str()}};
    f["bandwidth_bps"] = after.bandwidth_bps;
    f["latency_ms"] = after.latency_ms;
    f["loss_prob"] = after.loss_prob;
    f["up"] = after.up;
    log_.emit("link_change", std::move(f));
    if (after.carries_traffic() && !before.carries_traffic()) {
      // Custody holders forward as soon as contact returns.
      sim_.schedule_at(sim_.now(), [this, link] {
        for (const NodeId& n : {link.a, link.b}) {
          if (rt(n).up()) bus_.forward_bundles(n);
        }
      });
    }
  });

  Fields start{{"scenario", scenario_.name}, {"seed", seed_}, {"duration_ms", duration_},
               {"rebalance", rebalance_}};
  json node_ids = json::array();
  for (const auto& [id, _] : nodes_) node_ids.push_back(id);
  start["nodes"] = std::move(node_ids);
  log_.emit("run_start", std::move(start));

  every(0, cfg.membership.heartbeat_ms, [this] {
    for (auto& [_, n] : nodes_) {
      if (n->up()) heartbeat(*n);
    }
  });
  every(0, cfg.tick_ms, [this] { tick(); });
  every(cfg.sample_ms, cfg.sample_ms, [this] {
    for (auto& [_, n] : nodes_) {
      if (n->up()) sample(*n);
    }
  });
  every(cfg.anti_entropy_ms, cfg.anti_entropy_ms, [this] {
    for (auto& [_, n] : nodes_) {
      if (n->up()) anti_entropy(*n);
    }
  });

  for (std::size_t i = 0; i < scenario_.sources.size(); ++i) {
    source_rng_.emplace_back(splitmix64(seed_ ^ fnv1a64(scenario_.sources[i].id)));
  }
  for (std::size_t i = 0; i < scenario_.sources.size(); ++i) schedule_source(i, 0);

  for (const auto& p : scenario_.pipelines) {
    if (p.start_ms > duration_) continue;
    sim_.schedule_at(p.start_ms, [this, p] { request_pipeline(p.spec, p.deploy, "scenario"); });
  }
  for (const auto& ev : scenario_.events) {
    if (ev.at_ms > duration_) continue;
    sim_.schedule_at(ev.at_ms, [this, ev] { apply(ev, "scenario"); });
  }
}

World::~World() = default;

World::NodeRt& World::rt(const NodeId& id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::UnknownNode, id);
  return *it->second;
}

const World::NodeRt& World::rt(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::UnknownNode, id);
  return *it->second;
}

const node::NodeState& World::node(const NodeId& id) const { return rt(id).state; }
store::Replica& World::replica(const NodeId& id) { return rt(id).replica; }
const security::SecurityPosture& World::posture(const NodeId& id) const { return rt(id).posture; }
const orch::MembershipView& World::view(const NodeId& id) const { return rt(id).tracker.view(); }

const security::CapabilityToken& World::token(const std::string& name) const {
  auto it = tokens_.find(name);
  if (it == tokens_.end()) throw Error(Errc::InvalidArgument, "unknown token " + name);
  return it->second;
}

void World::every(SimTime at, SimTime period, std::function<void()> fn) {
  if (at > duration_) return;
  sim_.schedule_at(at, [this, at, period, fn] {
    fn();
    every(at + period, period, fn);
  });
}

void World::run() {
  run_until(duration_);
  finish();
}

void World::run_until(SimTime t) { sim_.advance(std::min(t, duration_)); }

void World::finish() {
  if (finished_) return;
  finished_ = true;
  log_.emit("run_end", Fields{{"events", log_.size()}});
}

// ---------------------------------------------------------------- sources

void World::schedule_source(std::size_t index, std::uint64_t k) {
  const SourceSpec& src = scenario_.sources[index];
  const SimTime at =
      src.start_ms + static_cast<SimTime>(std::floor(static_cast<double>(k) * 1000.0 / src.rate_hz));
  if (at > duration_ || (src.stop_ms && at >= *src.stop_ms)) return;
  sim_.schedule_at(at, [this, index, k] {
    const SourceSpec& s = scenario_.sources[index];
    if (rt(s.node).up()) {
      Message m;
      m.topic = s.topic;
      m.priority = s.priority;
      m.payload = random_bytes(source_rng_[index], s.payload_size);
      if (s.encode) {
        Message inner;
        inner.topic = s.encode->topic;
        inner.priority = s.priority;
        inner.payload = std::move(m.payload);
        m.payload = codecs_.get(s.encode->codec).encode(inner);
      }
      publish(s.node, std::move(m));
    }
    schedule_source(index, k + 1);
  });
}

void World::publish(const NodeId& node, Message message) {
  try {
    bus_.publish(node, std::move(message));
  } catch (const Error& e) {
    log_.emit("publish_error", Fields{{"node", node}, {"error", e.what()}});
  }
}

void World::send_control(const NodeId& from, const std::set<NodeId>& to, std::string_view topic,
                         const json& payload) {
  Message m;
  m.topic = std::string(topic);
  m.priority = 0;
  m.payload = to_bytes(payload.dump());
  bus_.send_to(from, to, std::move(m), bus_.topic(m.topic).qos);
}

// ------------------------------------------------------------------ ticks

void World::tick() {
  for (auto& [_, n] : nodes_) {
    if (n->up()) step_node(*n);
  }
  bus_.flush_filters();
}

void World::step_node(NodeRt& n) {
  const NodeId id = n.id();
  std::vector<bool> failed;
  auto payload = [&](const node::StageInstance& inst, const Message& in) -> Bytes {
    if (inst.stage.kind != "gateway") {
      failed.push_back(false);
      return node::synthetic_payload(inst, in);
    }
    try {
      Bytes out = gateway::translate(codecs_, in.payload, inst.stage.codec_from, inst.stage.codec_to);
      log_.emit("gateway_translate", Fields{{"node", id},
                                            {"instance", inst.instance_id},
                                            {"from", inst.stage.codec_from},
                                            {"to", inst.stage.codec_to},
                                            {"in_bytes", in.payload.size()},
                                            {"out_bytes", out.size()}});
      failed.push_back(false);
      return out;
    } catch (const Error& e) {
      log_.emit("gateway_error", Fields{{"node", id}, {"instance", inst.instance_id},
                                        {"origin", in.origin}, {"msg_seq", in.seq}, {"error", e.what()}});
      failed.push_back(true);
      return {};
    }
  };
  const node::StepResult r = node::step_execute(n.state, scenario_.settings.tick_ms, payload);
  for (std::size_t i = 0; i < r.outputs.size(); ++i) {
    if (failed[i]) continue;
    Message out = r.outputs[i].message;
    sim_.schedule_at(sim_.now() + r.outputs[i].offset_ms, [this, id, out] {
      if (bus_.node_up(id)) publish(id, out);
    });
  }
  if (r.went_down) {
    sim_.schedule_at(sim_.now() + r.elapsed_ms, [this, id] { fail_node(id, "battery"); });
  }
}

void World::heartbeat(NodeRt& n) {
  orch::Advertisement adv;
  adv.cpu_capacity = n.state.spec.cpu_capacity;
  adv.mem_capacity = n.state.spec.memory_capacity;
  adv.cpu_free = n.state.cpu_free;
  adv.mem_free = n.state.mem_free;
  adv.battery_pct = n.state.battery_pct();
  for (const auto& s : n.state.stages) {
    adv.instances.push_back({s.instance_id, s.pipeline, s.stage.name, s.queue.size()});
  }
  adv.subscriptions = bus_.subscriptions(n.id());
  const bool changed = n.tracker.observe({n.id(), sim_.now(), adv});
  n.last_adv[n.id()] = adv;
  refresh(n, changed);

  std::set<NodeId> peers;
  for (const NodeId& p : sim_.neighbors(n.id())) peers.insert(p);
  if (!peers.empty()) send_control(n.id(), peers, distrib::kHeartbeatTopic, adv_to_json(adv));
}

void World::refresh(NodeRt& n, bool membership_changed) {
  const std::set<NodeId> live = n.tracker.view().ids();
  if (membership_changed) {
    log_.emit("membership", Fields{{"node", n.id()}, {"epoch", n.tracker.view().epoch},
                                   {"live", live}});
    const node::SlotFilter slot = orch::membership_slot(n.id(), live);
    for (auto& s : n.state.stages) {
      if (!s.follow_membership) continue;
      if (s.slot.index != slot.index || s.slot.count != slot.count) {
        s.slot = slot;
        log_.emit("slot", Fields{{"node", n.id()}, {"instance", s.instance_id},
                                 {"index", slot.index}, {"count", slot.count}});
      }
    }
  }
  distrib::SubscriptionMap subs;
  for (const auto& [peer, topics] : n.known_subs) {
    if (peer == n.id()) continue;
    for (const auto& t : topics) subs[t].insert(peer);
  }
  for (const auto& t : bus_.subscriptions(n.id())) subs[t].insert(n.id());
  bus_.update_view(n.id(), subs, live);
}

void World::sample(NodeRt& n) {
  const NodeId id = n.id();
  for (const auto& s : n.state.stages) {
    log_.emit("queue_sample", Fields{{"node", id},
                                     {"instance", s.instance_id},
                                     {"pipeline", s.pipeline},
                                     {"stage", s.stage.name},
                                     {"depth", s.queue.size()}});
  }

  std::map<NodeId, double> capacity;
  for (const NodeId& peer : sim_.neighbors(id)) {
    capacity[peer] = static_cast<double>(sim_.probe_bandwidth(LinkId::of(id, peer)));
  }
  const auto readings = node::read_sensors(n.state, sim_.now(), capacity);
  for (const auto& r : readings) {
    if (r.sensor_id.rfind("network:", 0) != 0) continue;
    const NodeId peer = r.sensor_id.substr(8);
    const double bps = std::get<double>(r.value);
    for (const auto& action :
         orch::on_trigger(orch::BandwidthSample{id, peer, bps}, scenario_.settings.triggers)) {
      const auto& f = std::get<orch::SetFilter>(action);
      if (bus_.filter_enabled(id, peer) != f.enabled) {
        log_.emit("trigger", Fields{{"kind", "bandwidth"}, {"node", id}, {"peer", peer},
                                    {"bps", bps}});
        bus_.set_filter(id, peer, f.enabled);
      }
    }
  }

  bus_.forward_bundles(id);
  orchestrate(n);
}

void World::anti_entropy(NodeRt& n) {
  std::vector<NodeId> peers;
  for (const NodeId& p : n.tracker.view().ids()) {
    if (p != n.id() && sim_.has_link(n.id(), p)) peers.push_back(p);
  }
  if (peers.empty()) return;
  const NodeId peer = peers[n.sync_cursor++ % peers.size()];
  send_control(n.id(), {peer}, distrib::kStoreSyncTopic,
               json{{"op", "digest"}, {"digest", digest_to_json(n.replica.digest())}});
}

// ---------------------------------------------------------------- receive

void World::on_receive(const NodeId& node, const Message& m) {
  NodeRt& n = rt(node);
  try {
    if (m.topic == distrib::kHeartbeatTopic) return on_heartbeat(n, m);
    if (m.topic == distrib::kCommandTopic) return on_command(n, m);
    if (m.topic == distrib::kStoreSyncTopic) return on_sync(n, m);
    if (m.topic == distrib::kRevokeTopic) {
      const std::string id = to_string(m.payload);
      if (n.revocations.add(id)) {
        log_.emit("revoked", Fields{{"node", node}, {"token_id", id}, {"from", m.origin}});
      }
      return;
    }
  } catch (const std::exception& e) {
    log_.emit("control_error", Fields{{"node", node}, {"topic", m.topic}, {"error", e.what()}});
    return;
  }

  if (sinks_.count({node, m.topic})) {
    auto p = sink_pipeline_.find(m.topic);
    log_.emit("pipeline_output", Fields{{"node", node},
                                        {"pipeline", p == sink_pipeline_.end() ? "" : p->second},
                                        {"topic", m.topic},
                                        {"origin", m.origin},
                                        {"msg_seq", m.seq},
                                        {"e2e_ms", sim_.now() - m.trace_start}});
  }
  const std::uint64_t hash = m.id().hash();
  for (auto& s : n.state.stages) {
    if (s.stage.input_topic != m.topic || !s.slot.accepts(hash)) continue;
    if (node::enqueue(s, m, n.state.spec.queue_high_watermark)) {
      log_.emit("queue_high", Fields{{"node", node}, {"instance", s.instance_id},
                                     {"depth", s.queue.size()}});
    }
  }
}

void World::on_heartbeat(NodeRt& n, const Message& m) {
  orch::Advertisement adv = adv_from_json(json::parse(to_string(m.payload)));
  n.known_subs[m.origin] = adv.subscriptions;
  const bool changed = n.tracker.observe({m.origin, sim_.now(), adv});
  n.last_adv[m.origin] = std::move(adv);
  refresh(n, changed);
}

void World::on_command(NodeRt& n, const Message& m) {
  const json cmd = json::parse(to_string(m.payload));
  const std::string op = cmd.at("op").get<std::string>();
  const std::string id = cmd.at("id").get<std::string>();
  const NodeId self = n.id();
  bool subscriptions_changed = false;

  if (op == "deploy") {
    const PlacedInstance inst = placed_from_json(cmd.at("instance"));
    if (auto* existing = n.state.find(id)) {
      existing->slot = inst.slot;
      return;
    }
    const auto reject = node::admit_stage(n.state, inst.stage, id, inst.pipeline);
    if (reject) {
      log_.emit("deploy_rejected", Fields{{"node", self}, {"instance", id},
                                          {"reason", std::string(node::to_string(*reject))}});
      return;
    }
    node::StageInstance* s = n.state.find(id);
    s->follow_membership = inst.follow_membership;
    s->slot = inst.follow_membership ? orch::membership_slot(self, n.tracker.view().ids())
                                     : inst.slot;
    if (!bus_.subscriptions(self).count(inst.stage.input_topic)) {
      bus_.subscribe(self, inst.stage.input_topic);
      subscriptions_changed = true;
    }
    log_.emit("deploy", Fields{{"node", self},
                               {"instance", id},
                               {"pipeline", inst.pipeline},
                               {"stage", inst.stage.name},
                               {"cpu_demand", inst.stage.cpu_demand},
                               {"cpu_free", n.state.cpu_free},
                               {"slot", {s->slot.index, s->slot.count}},
                               {"leader", m.origin}});
  } else if (op == "remove") {
    auto* s = n.state.find(id);
    if (!s) return;
    const std::string topic = s->stage.input_topic;
    const std::size_t discarded = node::remove_stage(n.state, id);
    const bool still_needed =
        sinks_.count({self, topic}) > 0 ||
        std::any_of(n.state.stages.begin(), n.state.stages.end(),
                    [&](const node::StageInstance& x) { return x.stage.input_topic == topic; });
    if (!still_needed) {
      bus_.unsubscribe(self, topic);
      subscriptions_changed = true;
    }
    log_.emit("undeploy", Fields{{"node", self}, {"instance", id}, {"discarded", discarded},
                                 {"cpu_free", n.state.cpu_free}, {"leader", m.origin}});
  } else if (op == "slot") {
    auto* s = n.state.find(id);
    if (!s) return;
    s->slot.index = cmd.at("slot").at(0).get<std::uint32_t>();
    s->slot.count = cmd.at("slot").at(1).get<std::uint32_t>();
    log_.emit("slot", Fields{{"node", self}, {"instance", id}, {"index", s->slot.index},
                             {"count", s->slot.count}});
  } else {
    throw Error(Errc::Malformed, "unknown command " + op);
  }
  if (subscriptions_changed) refresh(n, false);
}

void World::on_sync(NodeRt& n, const Message& m) {
  const json msg = json::parse(to_string(m.payload));
  const std::string op = msg.at("op").get<std::string>();
  const NodeId peer = m.origin;
  if (op == "digest") {
    const store::Digest theirs = digest_from_json(msg.at("digest"));
    send_control(n.id(), {peer}, distrib::kStoreSyncTopic,
                 json{{"op", "delta"},
                      {"entries", entries_to_json(n.replica.delta_for(theirs))},
                      {"digest", digest_to_json(n.replica.digest())}});
    return;
  }
  const auto entries = entries_from_json(msg.at("entries"));
  const std::size_t changed = n.replica.apply(entries);
  if (!entries.empty()) {
    log_.emit("store_sync", Fields{{"node", n.id()}, {"peer", peer}, {"received", entries.size()},
                                   {"applied", changed}, {"hash", n.replica.content_hash()}});
  }
  if (op == "delta") {
    auto push = n.replica.delta_for(digest_from_json(msg.at("digest")));
    if (!push.empty()) {
      send_control(n.id(), {peer}, distrib::kStoreSyncTopic,
                   json{{"op", "push"}, {"entries", entries_to_json(push)}});
    }
  }
}

std::optional<std::string> World::gate(const NodeId& node, const Message& m) {
  const NodeRt& n = rt(node);
  if (n.posture.level == security::PostureLevel::Normal) return std::nullopt;
  security::EgressRequest req;
  req.topic_critical = bus_.topic(m.topic).critical;
  for (const auto& name : n.tokens) {
    const auto& tok = tokens_.at(name);
    if (security::verify_token(tok, roots_, n.revocations, sim_.now())) continue;
    req.holds_critical_right |= tok.grants("critical");
    req.holds_publish_right |= tok.grants("publish:" + m.topic);
  }
  if (security::egress_permitted(n.posture.level, req)) return std::nullopt;
  return "posture:" + std::string(security::to_string(n.posture.level));
}

void World::set_posture(NodeRt& n, const security::PostureTrigger& trigger,
                        const std::string& cause) {
  const security::SecurityPosture next = security::apply_posture(n.posture, trigger, sim_.now());
  if (next.level == n.posture.level) return;
  const auto previous = n.posture.level;
  n.posture = next;
  n.posture.cause = cause;
  log_.emit("posture", Fields{{"node", n.id()},
                              {"level", std::string(security::to_string(next.level))},
                              {"previous", std::string(security::to_string(previous))},
                              {"cause", cause}});
}

// ------------------------------------------------------------ node status

void World::fail_node(const NodeId& id, const std::string& cause) {
  NodeRt& n = rt(id);
  if (!bus_.node_up(id)) return;
  n.state.status = node::NodeStatus::Down;
  bus_.set_node_up(id, false);
  n.leading = false;
  log_.emit("node_down", Fields{{"node", id}, {"cause", cause},
                                {"battery_pct", n.state.battery_pct()}});
}

CommandResult World::restore_node(const NodeId& id) {
  NodeRt& n = rt(id);
  if (bus_.node_up(id)) return {409, {{"error", "node already up"}}};
  if (n.state.battery_j <= 0) {
    log_.emit("restore_failed", Fields{{"node", id}, {"reason", "battery"}});
    return {409, {{"error", "battery exhausted"}}};
  }
  // A restarted node comes back empty: stages and soft state are gone, the
  // store survives.
  const std::size_t lost = n.state.stages.size();
  for (const auto& s : n.state.stages) {
    if (!sinks_.count({id, s.stage.input_topic})) bus_.unsubscribe(id, s.stage.input_topic);
  }
  n.state.stages.clear();
  n.state.cpu_free = n.state.spec.cpu_capacity;
  n.state.mem_free = n.state.spec.memory_capacity;
  n.state.status = node::NodeStatus::Up;
  n.tracker = orch::MembershipTracker(scenario_.settings.membership);
  n.known_subs.clear();
  n.last_adv.clear();
  n.leading = false;
  bus_.set_node_up(id, true);
  log_.emit("node_up", Fields{{"node", id}, {"stages_lost", lost}});
  return {200, {{"node", id}, {"status", "up"}}};
}

// ----------------------------------------------------------- orchestrator

std::optional<NodeId> World::operator_leader() const {
  for (const auto& [id, n] : nodes_) {
    if (!n->up()) continue;
    for (const NodeId& candidate : n->tracker.view().ids()) {
      if (rt(candidate).up()) return candidate;
    }
    return id;
  }
  return std::nullopt;
}

std::optional<NodeId> World::leader() const { return operator_leader(); }

const Placement* World::leader_placement() const {
  const auto l = leader();
  if (!l) return nullptr;
  const NodeRt& n = rt(*l);
  return n.leading ? &n.placement : nullptr;
}

void World::become_leader(NodeRt& n) {
  n.leading = true;
  n.placement = Placement{};
  n.pipelines.clear();
  n.rebalancer = orch::Rebalancer(scenario_.settings.rebalancer);
  n.battery_latched.clear();
  n.last_sent.clear();
  n.next_replica.clear();
  n.reported_failures.clear();
  for (const auto& [key, entry] : n.replica.entries()) {
    if (entry.tombstone()) continue;
    try {
      if (key.rfind(kPlacementPrefix, 0) == 0) {
        const std::string id = key.substr(kPlacementPrefix.size());
        PlacedInstance inst = placed_from_json(json::parse(to_string(*entry.value)));
        auto& next = n.next_replica[orch::stage_key(inst.pipeline, inst.stage.name)];
        next = std::max(next, replica_index(id) + 1);
        n.placement.instances.emplace(id, std::move(inst));
      } else if (key.rfind(kPipelinePrefix, 0) == 0) {
        const json j = json::parse(to_string(*entry.value));
        PipelineDeploy d;
        d.spec = pipeline_from_json(j.at("spec"), "/spec");
        d.deploy = j.at("deploy").get<std::string>();
        n.pipelines[d.spec.id] = d;
        sink_pipeline_[d.spec.sink_topic] = d.spec.id;
      }
    } catch (const std::exception& e) {
      log_.emit("control_error", Fields{{"node", n.id()}, {"key", key}, {"error", e.what()}});
    }
  }
  n.placement.epoch = n.tracker.view().epoch;
  log_.emit("leader", Fields{{"node", n.id()}, {"epoch", n.tracker.view().epoch},
                             {"instances", n.placement.instances.size()},
                             {"pipelines", n.pipelines.size()}});
}

orch::MembershipView World::capacity_view(const NodeRt& n) const {
  orch::MembershipView v = n.tracker.view();
  for (auto& [id, m] : v.live) {
    double cpu = m.state.cpu_capacity;
    double mem = m.state.mem_capacity;
    for (const auto& [_, inst] : n.placement.instances) {
      if (inst.node != id) continue;
      cpu -= inst.stage.cpu_demand;
      mem -= inst.stage.mem_demand;
    }
    m.state.cpu_free = std::min(m.state.cpu_free, cpu);
    m.state.mem_free = std::min(m.state.mem_free, mem);
  }
  return v;
}

void World::deploy(NodeRt& n, const std::string& id, const PlacedInstance& inst) {
  n.placement.instances[id] = inst;
  n.replica.put(std::string(kPlacementPrefix) + id, to_bytes(to_json(inst).dump()), sim_.now());
  n.last_sent[id] = sim_.now();
  send_control(n.id(), {inst.node}, distrib::kCommandTopic,
               json{{"op", "deploy"}, {"id", id}, {"instance", to_json(inst)}});
}

void World::undeploy(NodeRt& n, const std::string& id) {
  auto it = n.placement.instances.find(id);
  if (it == n.placement.instances.end()) return;
  const NodeId host = it->second.node;
  n.placement.instances.erase(it);
  n.replica.remove(std::string(kPlacementPrefix) + id, sim_.now());
  n.last_sent.erase(id);
  if (n.tracker.view().contains(host)) {
    send_control(n.id(), {host}, distrib::kCommandTopic, json{{"op", "remove"}, {"id", id}});
  }
}

void World::commit(NodeRt& n, const Placement& next) {
  const Placement current = n.placement;
  for (const auto& [id, _] : current.instances) {
    if (!next.instances.count(id)) undeploy(n, id);
  }
  for (const auto& [id, inst] : next.instances) {
    auto it = current.instances.find(id);
    if (it == current.instances.end()) {
      deploy(n, id, inst);
      continue;
    }
    const PlacedInstance& old = it->second;
    if (old.slot.index == inst.slot.index && old.slot.count == inst.slot.count) continue;
    n.placement.instances[id] = inst;
    n.replica.put(std::string(kPlacementPrefix) + id, to_bytes(to_json(inst).dump()), sim_.now());
    if (!inst.follow_membership) {
      send_control(n.id(), {inst.node}, distrib::kCommandTopic,
                   json{{"op", "slot"}, {"id", id}, {"slot", {inst.slot.index, inst.slot.count}}});
    }
  }
  n.placement.epoch = n.tracker.view().epoch;
}

void World::respread(Placement& placement, const std::string& pipeline, const std::string& stage) {
  const auto replicas = placement.instances_of(pipeline, stage);
  for (std::size_t i = 0; i < replicas.size(); ++i) {
    auto& inst = placement.instances.at(replicas[i]);
    if (inst.follow_membership) continue;
    inst.slot = node::SlotFilter{static_cast<std::uint32_t>(i),
                                 static_cast<std::uint32_t>(replicas.size())};
  }
}

std::string World::next_instance_id(NodeRt& n, const std::string& pipeline,
                                    const std::string& stage) {
  int& next = n.next_replica[orch::stage_key(pipeline, stage)];
  for (const auto& id : n.placement.instances_of(pipeline, stage)) {
    next = std::max(next, replica_index(id) + 1);
  }
  return orch::instance_id(pipeline, stage, next++);
}

bool World::replan(NodeRt& n, Placement& next, const PlacedInstance& lost,
                   const std::set<NodeId>& exclude, const std::string& reason) {
  orch::PipelineSpec single;
  single.id = lost.pipeline;
  single.stages = {lost.stage};
  // Capacity as if `next` were already committed.
  orch::MembershipView view = capacity_view(n);
  for (auto& [id, m] : view.live) {
    for (const auto& [iid, inst] : next.instances) {
      if (inst.node == id && !n.placement.instances.count(iid)) {
        m.state.cpu_free -= inst.stage.cpu_demand;
        m.state.mem_free -= inst.stage.mem_demand;
      }
    }
  }
  const auto result = orch::allocate(single, view, exclude);
  if (const auto* inf = std::get_if<orch::Infeasible>(&result)) {
    log_.emit("replan_failed", Fields{{"leader", n.id()}, {"pipeline", lost.pipeline},
                                      {"stage", inf->stage}, {"reason", reason}});
    return false;
  }
  PlacedInstance inst = std::get<Placement>(result).instances.begin()->second;
  const std::string id = next_instance_id(n, lost.pipeline, lost.stage.name);
  log_.emit("replan", Fields{{"leader", n.id()}, {"pipeline", lost.pipeline},
                             {"stage", lost.stage.name}, {"instance", id}, {"node", inst.node},
                             {"reason", reason}});
  next.instances.emplace(id, std::move(inst));
  return true;
}

void World::orchestrate(NodeRt& n) {
  const orch::MembershipView& view = n.tracker.view();
  if (view.empty() || *view.ids().begin() != n.id()) {
    if (n.leading) {
      n.leading = false;
      log_.emit("leader_yield", Fields{{"node", n.id()}, {"epoch", view.epoch}});
    }
    return;
  }
  if (!n.leading) become_leader(n);
  const SimTime now = sim_.now();
  const std::set<NodeId> live = view.ids();
  const orch::TriggerConfig& triggers = scenario_.settings.triggers;

  // Instances on nodes that left the view.
  Placement next = n.placement;
  for (const auto& [id, inst] : n.placement.instances) {
    if (live.count(inst.node)) continue;
    log_.emit("instance_lost", Fields{{"leader", n.id()}, {"instance", id}, {"node", inst.node}});
    next.instances.erase(id);
    if (inst.follow_membership) continue;
    if (next.instances_of(inst.pipeline, inst.stage.name).empty()) {
      replan(n, next, inst, {}, "node_lost");
    }
    respread(next, inst.pipeline, inst.stage.name);
  }

  // Redundant groups cover every live node.
  for (const auto& [pid, d] : n.pipelines) {
    if (d.deploy != "redundant") continue;
    orch::MembershipView cap = capacity_view(n);
    for (const NodeId& node : live) {
      auto& free = cap.live.at(node).state;
      for (const auto& stage : d.spec.stages) {
        const std::string id = orch::stage_key(pid, stage.name) + "@" + node;
        if (next.instances.count(id)) continue;
        if (free.cpu_free + 1e-9 < stage.cpu_demand || free.mem_free + 1e-9 < stage.mem_demand) {
          if (n.reported_failures.insert(id).second) {
            log_.emit("replan_failed", Fields{{"leader", n.id()}, {"pipeline", pid},
                                              {"stage", stage.name + "@" + node},
                                              {"reason", "redundant_join"}});
          }
          continue;
        }
        free.cpu_free -= stage.cpu_demand;
        free.mem_free -= stage.mem_demand;
        next.instances.emplace(id, PlacedInstance{pid, stage, node,
                                                  orch::membership_slot(node, live), true});
      }
    }
  }

  // Battery rule, edge-triggered per node.
  for (const auto& [node, member] : view.live) {
    const auto actions =
        orch::on_trigger(orch::BatteryLevel{node, member.state.battery_pct}, triggers);
    if (actions.empty()) {
      n.battery_latched.erase(node);
      continue;
    }
    if (!n.battery_latched.insert(node).second) continue;
    log_.emit("trigger", Fields{{"kind", "battery"}, {"node", node},
                                {"pct", member.state.battery_pct}});
    int lowest = -1;
    for (const auto& [id, inst] : next.instances) {
      if (inst.node == node && !inst.follow_membership) lowest = std::max<int>(lowest, inst.stage.priority);
    }
    if (lowest < 0) continue;
    std::vector<std::pair<std::string, PlacedInstance>> evicted;
    for (const auto& [id, inst] : next.instances) {
      if (inst.node == node && !inst.follow_membership && inst.stage.priority == lowest) {
        evicted.emplace_back(id, inst);
      }
    }
    for (const auto& [id, inst] : evicted) {
      log_.emit("evict", Fields{{"leader", n.id()}, {"node", node}, {"instance", id},
                                {"priority", inst.stage.priority}});
      next.instances.erase(id);
      if (next.instances_of(inst.pipeline, inst.stage.name).empty()) {
        replan(n, next, inst, {node}, "battery");
      }
      respread(next, inst.pipeline, inst.stage.name);
    }
  }

  commit(n, next);

  if (rebalance_) {
    orch::QueueDepths depths;
    for (const auto& [node, member] : view.live) {
      for (const auto& r : member.state.instances) depths[r.instance_id] = r.depth;
    }
    const orch::MigrationPlan plan = n.rebalancer.rebalance(n.placement, depths, capacity_view(n), now);
    if (!plan.empty()) {
      Placement moved = n.placement;
      for (const auto& a : plan.actions) {
        const std::string id = next_instance_id(n, a.pipeline, a.stage);
        log_.emit("rebalance", Fields{{"leader", n.id()},
                                      {"action", std::string(orch::to_string(a.kind))},
                                      {"pipeline", a.pipeline},
                                      {"stage", a.stage},
                                      {"instance", id},
                                      {"replaces", a.replaces},
                                      {"from", a.from},
                                      {"to", a.to}});
        PlacedInstance inst = moved.instances.at(
            a.kind == orch::MigrationAction::Kind::Migrate
                ? a.replaces
                : moved.instances_of(a.pipeline, a.stage).front());
        inst.node = a.to;
        if (a.kind == orch::MigrationAction::Kind::Migrate) moved.instances.erase(a.replaces);
        moved.instances[id] = std::move(inst);
        respread(moved, a.pipeline, a.stage);
      }
      commit(n, moved);
    }
    for (const auto& key : plan.saturated) {
      log_.emit("Saturated", Fields{{"leader", n.id()}, {"stage", key}});
    }
  }

  // Commands can be lost with a node or a link; re-issue what is missing.
  for (const auto& [id, inst] : n.placement.instances) {
    auto adv = view.live.find(inst.node);
    if (adv == view.live.end()) continue;
    const auto& reported = adv->second.state.instances;
    const bool present = std::any_of(reported.begin(), reported.end(),
                                     [&](const orch::InstanceReport& r) { return r.instance_id == id; });
    if (present) continue;
    auto sent = n.last_sent.find(id);
    if (sent != n.last_sent.end() && now - sent->second < kResendAfterMs) continue;
    n.last_sent[id] = now;
    log_.emit("deploy_resend", Fields{{"leader", n.id()}, {"instance", id}, {"node", inst.node}});
    send_control(n.id(), {inst.node}, distrib::kCommandTopic,
                 json{{"op", "deploy"}, {"id", id}, {"instance", to_json(inst)}});
  }
}

CommandResult World::request_pipeline(const orch::PipelineSpec& pipeline, const std::string& deploy_mode,
                                      std::string_view source) {
  const auto leader_id = operator_leader();
  if (!leader_id) {
    log_.emit("pipeline_rejected", Fields{{"pipeline", pipeline.id}, {"reason", "EmptyMembership"},
                                          {"source", source}});
    return {409, {{"error", "EmptyMembership"}}};
  }
  NodeRt& n = rt(*leader_id);
  if (!n.leading) become_leader(n);

  std::vector<orch::AdaptationAction> actions =
      orch::on_trigger(orch::OperatorPipelineRequest{pipeline}, scenario_.settings.triggers);
  const orch::PipelineSpec& spec = std::get<orch::Allocate>(actions.front()).pipeline;

  if (n.pipelines.count(spec.id)) {
    log_.emit("pipeline_rejected", Fields{{"pipeline", spec.id}, {"reason", "DuplicateId"},
                                          {"source", source}});
    return {409, {{"error", "DuplicateId"}, {"pipeline", spec.id}}};
  }
  orch::AllocationResult result;
  try {
    result = deploy_mode == "redundant" ? orch::deploy_redundant(spec.stages, spec.id, capacity_view(n))
                                        : orch::allocate(spec, capacity_view(n));
  } catch (const Error& e) {
    log_.emit("pipeline_rejected", Fields{{"pipeline", spec.id}, {"reason", e.what()},
                                          {"source", source}});
    return {e.code() == Errc::EmptyMembership ? 409 : 400, {{"error", e.what()}}};
  }
  if (const auto* inf = std::get_if<orch::Infeasible>(&result)) {
    log_.emit("pipeline_infeasible", Fields{{"pipeline", spec.id}, {"stage", inf->stage},
                                            {"leader", n.id()}, {"source", source}});
    return {409, {{"error", "Infeasible"}, {"stage", inf->stage}}};
  }
  const Placement& placed = std::get<Placement>(result);
  n.pipelines[spec.id] = PipelineDeploy{spec, deploy_mode, sim_.now()};
  n.replica.put(std::string(kPipelinePrefix) + spec.id,
                to_bytes(json{{"spec", to_json(spec)}, {"deploy", deploy_mode}}.dump()), sim_.now());
  sink_pipeline_[spec.sink_topic] = spec.id;

  Fields instances = Fields::object();
  json body_instances = json::array();
  for (const auto& [id, inst] : placed.instances) {
    instances[id] = inst.node;
    body_instances.push_back({{"id", id}, {"node", inst.node}, {"stage", inst.stage.name},
                              {"slot", {inst.slot.index, inst.slot.count}}});
  }
  log_.emit("pipeline_placed", Fields{{"pipeline", spec.id}, {"leader", n.id()},
                                      {"epoch", placed.epoch}, {"deploy", deploy_mode},
                                      {"source", source}, {"instances", instances}});
  for (const auto& [id, inst] : placed.instances) {
    if (deploy_mode != "redundant") {
      int& next = n.next_replica[orch::stage_key(spec.id, inst.stage.name)];
      next = std::max(next, replica_index(id) + 1);
    }
    deploy(n, id, inst);
  }
  return {200, {{"pipeline", spec.id}, {"leader", n.id()}, {"epoch", placed.epoch},
                {"deploy", deploy_mode}, {"instances", body_instances}}};
}

// --------------------------------------------------------------- commands

CommandResult World::apply(const TimedEvent& ev, std::string_view source) {
  const json& b = ev.body;
  Fields audit{{"source", source}, {"event", ev.type}};
  for (const auto& [k, v] : b.items()) {
    if (k != "type" && k != "at_ms") audit[k] = v;
  }
  log_.emit("command", std::move(audit));

  const std::string& t = ev.type;
  auto node_arg = [&](const char* key) -> NodeRt& { return rt(b.at(key).get<std::string>()); };

  if (t == "link_profile") {
    const LinkId link = LinkId::of(b.at("a").get<std::string>(), b.at("b").get<std::string>());
    simnet::LinkProfile p = sim_.base_profile(link);
    if (b.contains("bandwidth_bps")) p.bandwidth_bps = b["bandwidth_bps"].get<std::uint64_t>();
    if (b.contains("latency_ms")) p.latency_ms = b["latency_ms"].get<SimTime>();
    if (b.contains("loss_prob")) p.loss_prob = b["loss_prob"].get<double>();
    if (b.contains("up")) p.up = b["up"].get<bool>();
    sim_.set_profile(link, p);
    return {200, to_json(sim_.profile(link))};
  }
  if (t == "node_fail") {
    NodeRt& n = node_arg("node");
    if (!n.up()) return {409, {{"error", "node already down"}}};
    fail_node(n.id(), std::string(source));
    return {200, {{"node", n.id()}, {"status", "down"}}};
  }
  if (t == "node_restore") return restore_node(b.at("node").get<std::string>());
  if (t == "battery") {
    NodeRt& n = node_arg("node");
    n.state.battery_j = n.state.spec.battery_capacity * b.at("pct").get<double>() / 100.0;
    log_.emit("battery_set", Fields{{"node", n.id()}, {"pct", n.state.battery_pct()}});
    return {200, {{"node", n.id()}, {"battery_pct", n.state.battery_pct()}}};
  }
  if (t == "publish") {
    NodeRt& n = node_arg("node");
    if (!n.up()) return {409, {{"error", "node down"}}};
    Message m;
    m.topic = b.at("topic").get<std::string>();
    m.priority = static_cast<std::uint8_t>(b.value("priority", 2));
    if (b.contains("payload_b64")) {
      auto payload = base64_decode(b["payload_b64"].get<std::string>());
      if (!payload) return {400, {{"error", "payload_b64 is not valid base64"}}};
      m.payload = std::move(*payload);
    } else {
      std::mt19937_64 rng(splitmix64(seed_ ^ fnv1a64(m.topic) ^ static_cast<std::uint64_t>(sim_.now())));
      m.payload = random_bytes(rng, b.value("payload_size", 32));
    }
    distrib::QosProfile qos = bus_.topic(m.topic).qos;
    if (b.contains("ttl_ms")) {
      qos.bundle_eligible = true;
      qos.bundle_ttl_ms = b["ttl_ms"].get<SimTime>();
    }
    if (b.value("reliable", false)) qos.reliability = distrib::Reliability::Reliable;
    const auto r = bus_.publish(n.id(), std::move(m), qos);
    Fields f{{"node", n.id()}, {"topic", b.at("topic").get<std::string>()}, {"origin", r.id.origin},
             {"msg_seq", r.id.seq}, {"ttl_ms", qos.bundle_eligible ? qos.bundle_ttl_ms : 0}};
    Fields outcomes = Fields::object();
    for (const auto& o : r.outcomes) outcomes[o.destination] = std::string(distrib::to_string(o.outcome));
    f["outcomes"] = std::move(outcomes);
    log_.emit("publish", f);
    return {200, json::parse(f.dump())};
  }
  if (t == "request_pipeline") {
    return request_pipeline(pipeline_from_json(b.at("pipeline"), "/pipeline"),
                            b.value("deploy", std::string("placed")), source);
  }
  if (t == "revoke_token") {
    const std::string id = security::token_id(token(b.at("token").get<std::string>()));
    if (b.contains("node")) {
      NodeRt& n = node_arg("node");
      if (!n.up()) return {409, {{"error", "node down"}}};
      if (n.revocations.add(id)) {
        log_.emit("revoked", Fields{{"node", n.id()}, {"token_id", id}, {"from", n.id()}});
      }
      std::set<NodeId> peers;
      for (const NodeId& p : sim_.neighbors(n.id())) peers.insert(p);
      Message m;
      m.topic = std::string(distrib::kRevokeTopic);
      m.priority = 0;
      m.payload = to_bytes(id);
      if (!peers.empty()) bus_.send_to(n.id(), peers, std::move(m), bus_.topic(m.topic).qos);
    } else {
      for (auto& [nid, n] : nodes_) {
        if (n->revocations.add(id)) {
          log_.emit("revoked", Fields{{"node", nid}, {"token_id", id}, {"from", "operator"}});
        }
      }
    }
    return {200, {{"token_id", id}}};
  }
  if (t == "posture") {
    const auto level = security::parse_posture_level(b.at("level").get<std::string>());
    const std::string cause = "operator:" + std::string(security::to_string(level));
    if (b.contains("node")) {
      set_posture(node_arg("node"), security::OperatorTrigger{level}, cause);
    } else {
      for (auto& [_, n] : nodes_) set_posture(*n, security::OperatorTrigger{level}, cause);
    }
    return {204, json::object()};
  }
  if (t == "threat") {
    NodeRt& n = node_arg("node");
    const bool clear = b.value("clear", false);
    if (clear) {
      n.state.threat_since.reset();
    } else if (!n.state.threat_since) {
      n.state.threat_since = sim_.now();
    }
    for (const auto& action :
         orch::on_trigger(orch::ThreatSignal{n.id(), !clear}, scenario_.settings.triggers)) {
      const auto& ap = std::get<orch::ApplyPosture>(action);
      set_posture(n, ap.trigger, clear ? "threat_clear" : "threat");
    }
    return {200, {{"node", n.id()},
                  {"posture", std::string(security::to_string(n.posture.level))}}};
  }
  if (t == "partition") {
    std::vector<std::set<NodeId>> groups;
    for (const auto& g : b.at("groups")) groups.push_back(g.get<std::set<NodeId>>());
    log_.emit("partition", Fields{{"groups", Fields::parse(b.at("groups").dump())}});
    sim_.partition(groups);
    return {200, json::object()};
  }
  if (t == "heal") {
    log_.emit("heal", Fields::object());
    sim_.heal();
    return {200, json::object()};
  }
  if (t == "store_put" || t == "store_get") {
    NodeRt& n = node_arg("node");
    const std::string key = b.at("key").get<std::string>();
    if (!n.up()) {
      log_.emit("store_error", Fields{{"node", n.id()}, {"key", key}, {"error", "NodeDown"}});
      return {409, {{"error", "node down"}}};
    }
    if (t == "store_put") {
      const std::string value = b.at("value").get<std::string>();
      const auto& e = n.replica.put(key, to_bytes(value), sim_.now());
      log_.emit("store_put", Fields{{"node", n.id()}, {"key", key}, {"bytes", value.size()},
                                    {"vv", e.vv.counters()}});
      return {200, {{"key", key}}};
    }
    const auto value = n.replica.get(key);
    Fields f{{"node", n.id()}, {"key", key}, {"found", value.has_value()}};
    if (value) f["value"] = to_string(*value);
    log_.emit("store_get", f);
    return {200, json::parse(f.dump())};
  }
  if (t == "verify_token") {
    NodeRt& n = node_arg("node");
    security::CapabilityToken tok = token(b.at("token").get<std::string>());
    const bool tamper = b.value("tamper", false);
    if (tamper) tok.rights.insert("critical");
    const auto reject = security::verify_token(tok, roots_, n.revocations, sim_.now());
    const std::string result = reject ? std::string(security::to_string(*reject)) : "ok";
    log_.emit("token_verify", Fields{{"node", n.id()}, {"token", b.at("token").get<std::string>()},
                                     {"token_id", security::token_id(tok)}, {"tampered", tamper},
                                     {"result", result}});
    return {200, {{"result", result}}};
  }
  throw Error(Errc::InvalidArgument, "unhandled event type " + t);
}

// -------------------------------------------------------------- snapshots

json World::topology() const {
  json nodes = json::array();
  const auto lead = leader();
  for (const auto& [id, n] : nodes_) {
    json stages = json::array();
    for (const auto& s : n->state.stages) stages.push_back(s.instance_id);
    nodes.push_back({{"id", id},
                     {"status", n->up() ? "up" : "down"},
                     {"battery_pct", n->state.battery_pct()},
                     {"cpu_free", n->state.cpu_free},
                     {"mem_free", n->state.mem_free},
                     {"posture", std::string(security::to_string(n->posture.level))},
                     {"leader", lead && *lead == id},
                     {"epoch", n->tracker.view().epoch},
                     {"stages", std::move(stages)}});
  }
  json links = json::array();
  for (const LinkId& l : sim_.links()) {
    const auto p = sim_.profile(l);
    links.push_back({{"id", l.str()},
                     {"a", l.a},
                     {"b", l.b},
                     {"up", p.up},
                     {"bandwidth_bps", p.bandwidth_bps},
                     {"latency_ms", p.latency_ms},
                     {"loss_prob", p.loss_prob},
                     {"measured_bps", sim_.measure_bandwidth(l, 1000)}});
  }
  return json{{"t", sim_.now()}, {"nodes", std::move(nodes)}, {"links", std::move(links)}};
}

json World::queues() const {
  json instances = json::array();
  for (const auto& [id, n] : nodes_) {
    for (const auto& s : n->state.stages) {
      instances.push_back({{"instance", s.instance_id},
                           {"node", id},
                           {"pipeline", s.pipeline},
                           {"stage", s.stage.name},
                           {"depth", s.queue.size()}});
    }
  }
  return json{{"t", sim_.now()}, {"instances", std::move(instances)}};
}

json World::placements() const {
  json out{{"t", sim_.now()}, {"leader", nullptr}, {"epoch", 0}, {"instances", json::array()}};
  const auto lead = leader();
  if (!lead) return out;
  out["leader"] = *lead;
  const NodeRt& n = rt(*lead);
  out["epoch"] = n.placement.epoch;
  for (const auto& [id, inst] : n.placement.instances) {
    out["instances"].push_back({{"id", id},
                                {"node", inst.node},
                                {"pipeline", inst.pipeline},
                                {"stage", inst.stage.name},
                                {"slot", {inst.slot.index, inst.slot.count}}});
  }
  return out;
}

}  // namespace edgetb::control
