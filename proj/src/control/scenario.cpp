#include "edgetb/control/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "edgetb/distrib/compression.hpp"
#include "edgetb/security/posture.hpp"
#include "edgetb/security/token.hpp"

namespace edgetb::control {

namespace {

std::string at(const std::string& path, std::string_view key) {
  return path + "/" + std::string(key);
}

std::string at(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

const json& object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path.empty() ? "/" : path, "expected an object");
  return j;
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array");
  return j;
}

const json* find(const json& obj, std::string_view key) {
  auto it = obj.find(std::string(key));
  return it == obj.end() ? nullptr : &*it;
}

const json& need(const json& obj, std::string_view key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) throw ScenarioError(at(path, key), "required");
  return *v;
}

std::string str(const json& obj, std::string_view key, const std::string& path,
                std::optional<std::string> def = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    throw ScenarioError(at(path, key), "required");
  }
  if (!v->is_string()) throw ScenarioError(at(path, key), "expected a string");
  return v->get<std::string>();
}

double num(const json& obj, std::string_view key, const std::string& path,
           std::optional<double> def = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    throw ScenarioError(at(path, key), "required");
  }
  if (!v->is_number()) throw ScenarioError(at(path, key), "expected a number");
  return v->get<double>();
}

std::int64_t integer(const json& obj, std::string_view key, const std::string& path,
                     std::optional<std::int64_t> def = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    throw ScenarioError(at(path, key), "required");
  }
  if (!v->is_number_integer()) throw ScenarioError(at(path, key), "expected an integer");
  return v->get<std::int64_t>();
}

std::int64_t non_negative(const json& obj, std::string_view key, const std::string& path,
                          std::optional<std::int64_t> def = std::nullopt) {
  const auto v = integer(obj, key, path, def);
  if (v < 0) throw ScenarioError(at(path, key), "must be >= 0");
  return v;
}

bool boolean(const json& obj, std::string_view key, const std::string& path, bool def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) throw ScenarioError(at(path, key), "expected a boolean");
  return v->get<bool>();
}

std::uint8_t priority(const json& obj, const std::string& path, std::int64_t def) {
  const auto p = integer(obj, "priority", path, def);
  if (p < 0 || p > 3) throw ScenarioError(at(path, "priority"), "must be 0..3");
  return static_cast<std::uint8_t>(p);
}

NodeId node_ref(const json& obj, std::string_view key, const std::string& path,
                const Scenario& s) {
  const std::string id = str(obj, key, path);
  if (!s.has_node(id)) throw ScenarioError(at(path, key), "unknown node '" + id + "'", true);
  return id;
}

simnet::LinkProfile profile_from(const json& j, const std::string& path,
                                 const simnet::LinkProfile& base) {
  simnet::LinkProfile p = base;
  p.bandwidth_bps = static_cast<std::uint64_t>(
      non_negative(j, "bandwidth_bps", path, static_cast<std::int64_t>(base.bandwidth_bps)));
  p.latency_ms = non_negative(j, "latency_ms", path, base.latency_ms);
  p.loss_prob = num(j, "loss_prob", path, base.loss_prob);
  if (!(p.loss_prob >= 0.0 && p.loss_prob <= 1.0)) {
    throw ScenarioError(at(path, "loss_prob"), "must be within [0, 1]");
  }
  p.up = boolean(j, "up", path, base.up);
  return p;
}

Settings settings_from(const json& j, const std::string& path) {
  object(j, path);
  Settings s;
  s.rebalance = boolean(j, "rebalance", path, s.rebalance);
  s.tick_ms = integer(j, "tick_ms", path, s.tick_ms);
  s.sample_ms = integer(j, "sample_ms", path, s.sample_ms);
  s.anti_entropy_ms = integer(j, "anti_entropy_ms", path, s.anti_entropy_ms);
  s.membership.heartbeat_ms = integer(j, "heartbeat_ms", path, s.membership.heartbeat_ms);
  s.membership.missed_limit =
      static_cast<int>(integer(j, "missed_heartbeats", path, s.membership.missed_limit));
  s.rebalancer.queue_high = static_cast<std::size_t>(
      non_negative(j, "queue_high", path, static_cast<std::int64_t>(s.rebalancer.queue_high)));
  s.rebalancer.window = static_cast<int>(integer(j, "rebalance_window", path, s.rebalancer.window));
  s.rebalancer.cooldown_ms = non_negative(j, "cooldown_ms", path, s.rebalancer.cooldown_ms);
  s.triggers.battery_low_pct = num(j, "battery_low_pct", path, s.triggers.battery_low_pct);
  s.triggers.bandwidth_floor_bps =
      num(j, "bandwidth_floor_bps", path, s.triggers.bandwidth_floor_bps);
  s.bus.max_queue_delay_ms = non_negative(j, "max_queue_delay_ms", path, s.bus.max_queue_delay_ms);
  for (const char* key : {"tick_ms", "sample_ms", "anti_entropy_ms", "heartbeat_ms"}) {
    if (integer(j, key, path, 1) <= 0) throw ScenarioError(at(path, key), "must be > 0");
  }
  if (s.membership.missed_limit <= 0) {
    throw ScenarioError(at(path, "missed_heartbeats"), "must be > 0");
  }
  if (s.rebalancer.window <= 0) throw ScenarioError(at(path, "rebalance_window"), "must be > 0");
  return s;
}

node::NodeSpec node_from(const json& j, const std::string& path) {
  object(j, path);
  node::NodeSpec n;
  n.id = str(j, "id", path);
  if (n.id.empty()) throw ScenarioError(at(path, "id"), "must not be empty");
  n.cpu_capacity = num(j, "cpu", path);
  n.memory_capacity = num(j, "memory", path, 1024.0);
  n.battery_capacity = num(j, "battery_j", path, 1e6);
  n.idle_drain_w = num(j, "idle_w", path, n.idle_drain_w);
  n.active_drain = num(j, "active_w", path, n.active_drain);
  n.queue_high_watermark = static_cast<std::size_t>(
      non_negative(j, "queue_high_watermark", path,
                   static_cast<std::int64_t>(n.queue_high_watermark)));
  if (const json* loc = find(j, "location")) {
    const std::string p = at(path, "location");
    object(*loc, p);
    n.location = {num(*loc, "x", p), num(*loc, "y", p)};
  }
  if (const json* wps = find(j, "waypoints")) {
    const std::string p = at(path, "waypoints");
    array(*wps, p);
    for (std::size_t i = 0; i < wps->size(); ++i) {
      const std::string wp = at(p, i);
      const json& w = object((*wps)[i], wp);
      node::Waypoint point{non_negative(w, "at_ms", wp), {num(w, "x", wp), num(w, "y", wp)}};
      if (!n.waypoints.empty() && point.at <= n.waypoints.back().at) {
        throw ScenarioError(at(wp, "at_ms"), "waypoints must strictly increase in time");
      }
      n.waypoints.push_back(point);
    }
  }
  if (const json* sensors = find(j, "sensors")) {
    const std::string p = at(path, "sensors");
    array(*sensors, p);
    for (std::size_t i = 0; i < sensors->size(); ++i) {
      if (!(*sensors)[i].is_string()) throw ScenarioError(at(p, i), "expected a string");
      const auto name = (*sensors)[i].get<std::string>();
      if (std::find(node::kSupportedSensors.begin(), node::kSupportedSensors.end(), name) ==
          node::kSupportedSensors.end()) {
        throw ScenarioError(at(p, i), "unknown sensor '" + name + "'");
      }
      n.sensors.push_back(name);
    }
  }
  try {
    node::validate(n);
  } catch (const Error& e) {
    throw ScenarioError(path, e.detail());
  }
  return n;
}

TopicSpec topic_from(const json& j, const std::string& path) {
  object(j, path);
  TopicSpec t;
  t.name = str(j, "name", path);
  if (t.name.empty()) throw ScenarioError(at(path, "name"), "must not be empty");
  if (distrib::is_reserved_topic(t.name)) {
    throw ScenarioError(at(path, "name"), "reserved topic");
  }
  const std::string rel = str(j, "reliability", path, std::string("best_effort"));
  if (rel == "reliable") {
    t.config.qos.reliability = distrib::Reliability::Reliable;
  } else if (rel != "best_effort") {
    throw ScenarioError(at(path, "reliability"), "expected reliable or best_effort");
  }
  t.config.qos.history_depth = static_cast<std::uint32_t>(non_negative(j, "history_depth", path, 1));
  if (find(j, "deadline_ms")) t.config.qos.deadline_ms = non_negative(j, "deadline_ms", path);
  t.config.qos.bundle_eligible = boolean(j, "bundle_eligible", path, false);
  t.config.qos.bundle_ttl_ms = non_negative(j, "bundle_ttl_ms", path, t.config.qos.bundle_ttl_ms);
  t.config.compression = str(j, "compression", path, std::string("identity"));
  if (!distrib::known_compressor(t.config.compression)) {
    throw ScenarioError(at(path, "compression"), "unknown compressor");
  }
  t.config.critical = boolean(j, "critical", path, false);
  try {
    distrib::validate(t.config.qos);
  } catch (const Error& e) {
    throw ScenarioError(path, e.detail());
  }
  return t;
}

void check_codec(const std::string& codec, const std::string& path) {
  if (codec != "bin.v1" && codec != "text.v1") {
    throw ScenarioError(path, "unknown codec '" + codec + "'", true);
  }
}

bool is_hex(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  });
}

std::set<std::string> rights_from(const json& j, const std::string& path) {
  array(j, path);
  std::set<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw ScenarioError(at(path, i), "expected a string");
    out.insert(j[i].get<std::string>());
  }
  return out;
}

}  // namespace

bool Scenario::has_node(const NodeId& id) const {
  return std::any_of(nodes.begin(), nodes.end(), [&](const node::NodeSpec& n) { return n.id == id; });
}

bool Scenario::has_token(const std::string& name) const {
  return std::any_of(security.tokens.begin(), security.tokens.end(),
                     [&](const TokenSpec& t) { return t.name == name; });
}

std::set<std::string> Scenario::known_topics() const {
  std::set<std::string> out;
  for (const auto& t : topics) out.insert(t.name);
  for (const auto& p : pipelines) {
    for (const auto& s : p.spec.stages) {
      out.insert(s.input_topic);
      out.insert(s.output_topic);
    }
  }
  return out;
}

orch::StageSpec stage_from_json(const json& j, const std::string& path) {
  object(j, path);
  orch::StageSpec s;
  s.name = str(j, "name", path);
  s.cpu_demand = num(j, "cpu_demand", path);
  s.mem_demand = num(j, "mem_demand", path, 1.0);
  s.per_item_cost = num(j, "per_item_cost", path, 1.0);
  s.input_topic = str(j, "input_topic", path);
  s.output_topic = str(j, "output_topic", path);
  s.output_size = static_cast<std::uint32_t>(non_negative(j, "output_size", path, 64));
  s.priority = priority(j, path, 2);
  s.kind = str(j, "kind", path, std::string("compute"));
  if (s.kind != "compute" && s.kind != "gateway") {
    throw ScenarioError(at(path, "kind"), "expected compute or gateway");
  }
  if (s.kind == "gateway") {
    s.codec_from = str(j, "codec_from", path);
    s.codec_to = str(j, "codec_to", path);
    check_codec(s.codec_from, at(path, "codec_from"));
    check_codec(s.codec_to, at(path, "codec_to"));
  }
  if (!(s.cpu_demand > 0)) throw ScenarioError(at(path, "cpu_demand"), "must be > 0");
  if (!(s.mem_demand > 0)) throw ScenarioError(at(path, "mem_demand"), "must be > 0");
  if (!(s.per_item_cost > 0)) throw ScenarioError(at(path, "per_item_cost"), "must be > 0");
  for (const char* key : {"input_topic", "output_topic"}) {
    const std::string topic = str(j, key, path);
    if (topic.empty() || distrib::is_reserved_topic(topic)) {
      throw ScenarioError(at(path, key), "invalid topic");
    }
  }
  return s;
}

orch::PipelineSpec pipeline_from_json(const json& j, const std::string& path) {
  object(j, path);
  orch::PipelineSpec p;
  p.id = str(j, "id", path);
  const std::string sp = at(path, "stages");
  const json& stages = array(need(j, "stages", path), sp);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    p.stages.push_back(stage_from_json(stages[i], at(sp, i)));
  }
  if (p.stages.empty()) throw ScenarioError(sp, "at least one stage required");
  p.source_topic = str(j, "source_topic", path, p.stages.front().input_topic);
  p.sink_topic = str(j, "sink_topic", path, p.stages.back().output_topic);
  try {
    orch::validate(p);
  } catch (const Error& e) {
    throw ScenarioError(path, e.detail());
  }
  return p;
}

json to_json(const orch::StageSpec& s) {
  json j{{"name", s.name},
         {"cpu_demand", s.cpu_demand},
         {"mem_demand", s.mem_demand},
         {"per_item_cost", s.per_item_cost},
         {"input_topic", s.input_topic},
         {"output_topic", s.output_topic},
         {"output_size", s.output_size},
         {"priority", s.priority},
         {"kind", s.kind}};
  if (s.kind == "gateway") {
    j["codec_from"] = s.codec_from;
    j["codec_to"] = s.codec_to;
  }
  return j;
}

json to_json(const orch::PipelineSpec& p) {
  json stages = json::array();
  for (const auto& s : p.stages) stages.push_back(to_json(s));
  return json{{"id", p.id}, {"source_topic", p.source_topic}, {"sink_topic", p.sink_topic},
              {"stages", std::move(stages)}};
}

json to_json(const orch::PlacedInstance& inst) {
  return json{{"pipeline", inst.pipeline},
              {"stage", to_json(inst.stage)},
              {"node", inst.node},
              {"slot", {inst.slot.index, inst.slot.count}},
              {"follow_membership", inst.follow_membership}};
}

orch::PlacedInstance placed_from_json(const json& j) {
  orch::PlacedInstance inst;
  inst.pipeline = j.at("pipeline").get<std::string>();
  inst.stage = stage_from_json(j.at("stage"), "/stage");
  inst.node = j.at("node").get<std::string>();
  inst.slot.index = j.at("slot").at(0).get<std::uint32_t>();
  inst.slot.count = j.at("slot").at(1).get<std::uint32_t>();
  inst.follow_membership = j.at("follow_membership").get<bool>();
  return inst;
}

json to_json(const simnet::LinkProfile& p) {
  return json{{"bandwidth_bps", p.bandwidth_bps},
              {"latency_ms", p.latency_ms},
              {"loss_prob", p.loss_prob},
              {"up", p.up}};
}

TimedEvent parse_event(const json& j, const Scenario& s, const std::string& path,
                       bool require_time) {
  object(j, path);
  TimedEvent ev;
  ev.at_ms = require_time ? non_negative(j, "at_ms", path) : non_negative(j, "at_ms", path, 0);
  ev.type = str(j, "type", path);
  if (!kEventTypes.count(ev.type)) {
    throw ScenarioError(at(path, "type"), "unknown event type '" + ev.type + "'");
  }
  const std::string& t = ev.type;
  if (t == "link_profile") {
    const NodeId a = node_ref(j, "a", path, s);
    const NodeId b = node_ref(j, "b", path, s);
    const bool exists = std::any_of(s.links.begin(), s.links.end(), [&](const LinkSpec& l) {
      return LinkId::of(l.a, l.b) == LinkId::of(a, b);
    });
    if (!exists) throw ScenarioError(at(path, "b"), "no link " + a + "~" + b, true);
    profile_from(j, path, simnet::LinkProfile{});
  } else if (t == "node_fail" || t == "node_restore" || t == "threat") {
    node_ref(j, "node", path, s);
    boolean(j, "clear", path, false);
  } else if (t == "battery") {
    node_ref(j, "node", path, s);
    const double pct = num(j, "pct", path);
    if (!(pct >= 0 && pct <= 100)) throw ScenarioError(at(path, "pct"), "must be within [0, 100]");
  } else if (t == "publish") {
    node_ref(j, "node", path, s);
    const std::string topic = str(j, "topic", path);
    if (!s.known_topics().count(topic)) {
      throw ScenarioError(at(path, "topic"), "unknown topic '" + topic + "'", true);
    }
    priority(j, path, 2);
    non_negative(j, "payload_size", path, 32);
    if (find(j, "payload_b64")) str(j, "payload_b64", path);
    if (find(j, "ttl_ms") && non_negative(j, "ttl_ms", path) == 0) {
      throw ScenarioError(at(path, "ttl_ms"), "must be > 0");
    }
    boolean(j, "reliable", path, false);
  } else if (t == "request_pipeline") {
    pipeline_from_json(need(j, "pipeline", path), at(path, "pipeline"));
    const std::string deploy = str(j, "deploy", path, std::string("placed"));
    if (deploy != "placed" && deploy != "redundant") {
      throw ScenarioError(at(path, "deploy"), "expected placed or redundant");
    }
  } else if (t == "revoke_token" || t == "verify_token") {
    const std::string token = str(j, "token", path);
    if (!s.has_token(token)) {
      throw ScenarioError(at(path, "token"), "unknown token '" + token + "'", true);
    }
    if (t == "verify_token" || find(j, "node")) node_ref(j, "node", path, s);
    boolean(j, "tamper", path, false);
  } else if (t == "posture") {
    try {
      security::parse_posture_level(str(j, "level", path));
    } catch (const Error& e) {
      throw ScenarioError(at(path, "level"), e.detail());
    }
    if (find(j, "node")) node_ref(j, "node", path, s);
  } else if (t == "partition") {
    const std::string gp = at(path, "groups");
    const json& groups = array(need(j, "groups", path), gp);
    std::set<NodeId> seen;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const json& members = array(groups[g], at(gp, g));
      for (std::size_t i = 0; i < members.size(); ++i) {
        const std::string mp = at(at(gp, g), i);
        if (!members[i].is_string()) throw ScenarioError(mp, "expected a string");
        const auto id = members[i].get<std::string>();
        if (!s.has_node(id)) throw ScenarioError(mp, "unknown node '" + id + "'", true);
        if (!seen.insert(id).second) throw ScenarioError(mp, "node in two groups");
      }
    }
  } else if (t == "store_put" || t == "store_get") {
    node_ref(j, "node", path, s);
    str(j, "key", path);
    if (t == "store_put") str(j, "value", path);
  }
  ev.body = j;
  return ev;
}

Scenario load_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
  object(root, "");
  Scenario s;
  s.schema_version = static_cast<int>(integer(root, "schema_version", "", kSchemaVersion));
  if (s.schema_version != kSchemaVersion) {
    throw ScenarioError("/schema_version", "unsupported version");
  }
  s.name = str(root, "name", "", std::string());
  s.seed = static_cast<std::uint64_t>(non_negative(root, "seed", "", 0));
  s.duration_ms = non_negative(root, "duration_ms", "");
  if (const json* settings = find(root, "settings")) s.settings = settings_from(*settings, "/settings");

  const json& nodes = array(need(root, "nodes", ""), "/nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    node::NodeSpec n = node_from(nodes[i], at("/nodes", i));
    if (s.has_node(n.id)) throw ScenarioError(at(at("/nodes", i), "id"), "duplicate node id");
    s.nodes.push_back(std::move(n));
  }

  if (const json* links = find(root, "links")) {
    array(*links, "/links");
    std::set<LinkId> seen;
    for (std::size_t i = 0; i < links->size(); ++i) {
      const std::string lp = at("/links", i);
      const json& lj = object((*links)[i], lp);
      LinkSpec l;
      l.a = node_ref(lj, "a", lp, s);
      l.b = node_ref(lj, "b", lp, s);
      if (l.a == l.b) throw ScenarioError(at(lp, "b"), "self link");
      if (!seen.insert(LinkId::of(l.a, l.b)).second) throw ScenarioError(lp, "duplicate link");
      simnet::LinkProfile base;
      base.bandwidth_bps = static_cast<std::uint64_t>(non_negative(lj, "bandwidth_bps", lp));
      l.profile = profile_from(lj, lp, base);
      if (const json* sched = find(lj, "schedule")) {
        const std::string sp = at(lp, "schedule");
        array(*sched, sp);
        simnet::LinkProfile prev = l.profile;
        for (std::size_t k = 0; k < sched->size(); ++k) {
          const std::string cp = at(sp, k);
          const json& c = object((*sched)[k], cp);
          simnet::LinkChange change{non_negative(c, "at_ms", cp), profile_from(c, cp, prev)};
          if (!l.schedule.empty() && change.at_ms <= l.schedule.back().at_ms) {
            throw ScenarioError(at(cp, "at_ms"), "schedule must strictly increase");
          }
          prev = change.profile;
          l.schedule.push_back(change);
        }
      }
      s.links.push_back(std::move(l));
    }
  }

  if (const json* topics = find(root, "topics")) {
    array(*topics, "/topics");
    std::set<std::string> names;
    for (std::size_t i = 0; i < topics->size(); ++i) {
      TopicSpec t = topic_from((*topics)[i], at("/topics", i));
      if (!names.insert(t.name).second) {
        throw ScenarioError(at(at("/topics", i), "name"), "duplicate topic");
      }
      s.topics.push_back(std::move(t));
    }
  }

  if (const json* pipelines = find(root, "pipelines")) {
    array(*pipelines, "/pipelines");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < pipelines->size(); ++i) {
      const std::string pp = at("/pipelines", i);
      const json& pj = object((*pipelines)[i], pp);
      PipelineDeploy d;
      d.spec = pipeline_from_json(pj, pp);
      d.deploy = str(pj, "deploy", pp, std::string("placed"));
      if (d.deploy != "placed" && d.deploy != "redundant") {
        throw ScenarioError(at(pp, "deploy"), "expected placed or redundant");
      }
      d.start_ms = non_negative(pj, "start_ms", pp, d.start_ms);
      if (!ids.insert(d.spec.id).second) throw ScenarioError(at(pp, "id"), "duplicate pipeline id");
      s.pipelines.push_back(std::move(d));
    }
  }

  const std::set<std::string> topics = s.known_topics();
  if (const json* sources = find(root, "sources")) {
    array(*sources, "/sources");
    for (std::size_t i = 0; i < sources->size(); ++i) {
      const std::string sp = at("/sources", i);
      const json& sj = object((*sources)[i], sp);
      SourceSpec src;
      src.id = str(sj, "id", sp, "src" + std::to_string(i));
      src.node = node_ref(sj, "node", sp, s);
      src.topic = str(sj, "topic", sp);
      if (!topics.count(src.topic)) {
        throw ScenarioError(at(sp, "topic"), "unknown topic '" + src.topic + "'", true);
      }
      src.rate_hz = num(sj, "rate_hz", sp);
      if (!(src.rate_hz > 0)) throw ScenarioError(at(sp, "rate_hz"), "must be > 0");
      src.payload_size = static_cast<std::uint32_t>(non_negative(sj, "payload_size", sp, 32));
      src.priority = priority(sj, sp, 2);
      src.start_ms = non_negative(sj, "start_ms", sp, 0);
      if (find(sj, "stop_ms")) src.stop_ms = non_negative(sj, "stop_ms", sp);
      if (const json* enc = find(sj, "encode")) {
        const std::string ep = at(sp, "encode");
        object(*enc, ep);
        EncodeSpec e{str(*enc, "codec", ep), str(*enc, "topic", ep)};
        check_codec(e.codec, at(ep, "codec"));
        if (e.topic.empty() || e.topic.find_first_of("|\n") != std::string::npos) {
          throw ScenarioError(at(ep, "topic"), "topic must be non-empty without '|' or newline");
        }
        src.encode = e;
      }
      s.sources.push_back(std::move(src));
    }
  }

  if (const json* sinks = find(root, "sinks")) {
    array(*sinks, "/sinks");
    for (std::size_t i = 0; i < sinks->size(); ++i) {
      const std::string sp = at("/sinks", i);
      const json& sj = object((*sinks)[i], sp);
      SinkSpec sink{node_ref(sj, "node", sp, s), str(sj, "topic", sp)};
      if (!topics.count(sink.topic)) {
        throw ScenarioError(at(sp, "topic"), "unknown topic '" + sink.topic + "'", true);
      }
      s.sinks.push_back(std::move(sink));
    }
  }

  if (const json* sec = find(root, "security")) {
    object(*sec, "/security");
    std::set<std::string> key_ids;
    if (const json* keys = find(*sec, "keys")) {
      array(*keys, "/security/keys");
      for (std::size_t i = 0; i < keys->size(); ++i) {
        const std::string kp = at("/security/keys", i);
        const json& kj = object((*keys)[i], kp);
        KeySpec k{str(kj, "id", kp), str(kj, "seed_hex", kp)};
        if (k.seed_hex.size() != 64 || !is_hex(k.seed_hex)) {
          throw ScenarioError(at(kp, "seed_hex"), "expected 64 hex characters");
        }
        if (!key_ids.insert(k.id).second) throw ScenarioError(at(kp, "id"), "duplicate key id");
        s.security.keys.push_back(std::move(k));
      }
    }
    if (const json* roots = find(*sec, "trust_roots")) {
      array(*roots, "/security/trust_roots");
      for (std::size_t i = 0; i < roots->size(); ++i) {
        const std::string rp = at("/security/trust_roots", i);
        if (!(*roots)[i].is_string()) throw ScenarioError(rp, "expected a string");
        const auto id = (*roots)[i].get<std::string>();
        if (!key_ids.count(id)) throw ScenarioError(rp, "unknown key '" + id + "'", true);
        s.security.trust_roots.push_back(id);
      }
    }
    if (const json* tokens = find(*sec, "tokens")) {
      array(*tokens, "/security/tokens");
      for (std::size_t i = 0; i < tokens->size(); ++i) {
        const std::string tp = at("/security/tokens", i);
        const json& tj = object((*tokens)[i], tp);
        TokenSpec t;
        t.name = str(tj, "name", tp);
        if (s.has_token(t.name)) throw ScenarioError(at(tp, "name"), "duplicate token name");
        t.holder = node_ref(tj, "holder", tp, s);
        t.subject = str(tj, "subject", tp, t.holder);
        t.rights = rights_from(need(tj, "rights", tp), at(tp, "rights"));
        t.issued_at = non_negative(tj, "issued_at", tp, 0);
        t.expires_at = non_negative(tj, "expires_at", tp);
        t.issuer = str(tj, "issuer", tp);
        if (std::find(s.security.trust_roots.begin(), s.security.trust_roots.end(), t.issuer) ==
            s.security.trust_roots.end()) {
          throw ScenarioError(at(tp, "issuer"), "issuer is not a trust root", true);
        }
        if (t.expires_at <= t.issued_at) throw ScenarioError(at(tp, "expires_at"), "must be after issued_at");
        s.security.tokens.push_back(std::move(t));
      }
    }
  }

  if (const json* events = find(root, "events")) {
    array(*events, "/events");
    for (std::size_t i = 0; i < events->size(); ++i) {
      const std::string ep = at("/events", i);
      TimedEvent ev = parse_event((*events)[i], s, ep);
      if (!s.events.empty() && ev.at_ms < s.events.back().at_ms) {
        throw ScenarioError(at(ep, "at_ms"), "events must be sorted by at_ms");
      }
      s.events.push_back(std::move(ev));
    }
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

}  // namespace edgetb::control
