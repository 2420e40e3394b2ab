#include "edgetb/simnet/simulator.hpp"

#include <algorithm>

#include "edgetb/common/checksum.hpp"
#include "edgetb/common/error.hpp"

namespace edgetb::simnet {

namespace {

// Delivery history kept for bandwidth metering.
constexpr SimTime kHistoryMs = 10 * 60 * 1000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::string_view to_string(FrameDrop reason) {
  switch (reason) {
    case FrameDrop::LinkDown: return "LinkDown";
    case FrameDrop::Loss: return "Loss";
  }
  return "?";
}

void validate(const LinkProfile& profile) {
  if (!(profile.loss_prob >= 0.0 && profile.loss_prob <= 1.0)) {
    throw Error(Errc::InvalidArgument, "loss_prob outside [0,1]");
  }
  if (profile.latency_ms < 0) {
    throw Error(Errc::InvalidArgument, "negative latency");
  }
}

SimTime serialization_ms(std::uint64_t bits, std::uint64_t bandwidth_bps) {
  if (bandwidth_bps == 0) return 0;
  const unsigned __int128 scaled = static_cast<unsigned __int128>(bits) * 1000u;
  return static_cast<SimTime>((scaled + bandwidth_bps - 1) / bandwidth_bps);
}

Simulator::Simulator(std::uint64_t seed) : seed_(seed) {}

void Simulator::add_node(const NodeId& id) { nodes_.insert(id); }

void Simulator::add_link(const NodeId& a, const NodeId& b,
                         const LinkProfile& profile) {
  if (!has_node(a)) throw Error(Errc::UnknownNode, a);
  if (!has_node(b)) throw Error(Errc::UnknownNode, b);
  if (a == b) throw Error(Errc::InvalidArgument, "self link " + a);
  validate(profile);
  const LinkId id = LinkId::of(a, b);
  if (links_.count(id)) throw Error(Errc::DuplicateId, id.str());
  Link link;
  link.base = profile;
  link.rng.seed(splitmix64(seed_ ^ fnv1a64(id.str())));
  links_.emplace(id, std::move(link));
}

bool Simulator::has_link(const NodeId& a, const NodeId& b) const {
  return links_.count(LinkId::of(a, b)) > 0;
}

std::vector<LinkId> Simulator::links() const {
  std::vector<LinkId> out;
  out.reserve(links_.size());
  for (const auto& [id, _] : links_) out.push_back(id);
  return out;
}

std::vector<NodeId> Simulator::neighbors(const NodeId& node) const {
  std::vector<NodeId> out;
  for (const auto& [id, _] : links_) {
    if (id.touches(node)) out.push_back(id.other(node));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Simulator::Link& Simulator::link_ref(const LinkId& id) {
  auto it = links_.find(id);
  if (it == links_.end()) throw Error(Errc::UnknownLink, id.str());
  return it->second;
}

const Simulator::Link& Simulator::link_ref(const LinkId& id) const {
  auto it = links_.find(id);
  if (it == links_.end()) throw Error(Errc::UnknownLink, id.str());
  return it->second;
}

LinkProfile Simulator::effective(const LinkId& id, const LinkProfile& base) const {
  LinkProfile p = base;
  if (cut_.count(id)) p.up = false;
  return p;
}

LinkProfile Simulator::profile(const LinkId& link) const {
  return effective(link, link_ref(link).base);
}

LinkProfile Simulator::base_profile(const LinkId& link) const {
  return link_ref(link).base;
}

LinkProfile Simulator::profile_at(const LinkId& id, SimTime at) const {
  const Link& link = link_ref(id);
  LinkProfile p = link.base;
  for (auto it = link.pending.begin(); it != link.pending.end() && it->first <= at;
       ++it) {
    p = it->second;
  }
  return effective(id, p);
}

void Simulator::push(SimTime time, decltype(Event::body) body) {
  queue_.push(Event{time, next_seq_++, std::move(body)});
}

DeliveryDecision Simulator::transmit(const NodeId& src, const NodeId& dst,
                                     Bytes frame, SimTime at) {
  if (!has_node(src)) throw Error(Errc::UnknownNode, src);
  if (!has_node(dst)) throw Error(Errc::UnknownNode, dst);
  if (at < now_) throw Error(Errc::InvalidArgument, "transmit in the past");
  const LinkId id = LinkId::of(src, dst);
  Link& link = link_ref(id);
  Direction& dir = (src == id.a) ? link.forward : link.backward;

  const SimTime start = std::max(at, dir.busy_until);
  const LinkProfile p = profile_at(id, start);
  if (!p.carries_traffic()) return Dropped{FrameDrop::LinkDown};

  const std::uint64_t bits = static_cast<std::uint64_t>(frame.size()) * 8;
  const SimTime ser = serialization_ms(bits, p.bandwidth_bps);
  dir.busy_until = start + ser;

  // Lost frames still occupy the link for their serialization time.
  if (unit_draw(link.rng) < p.loss_prob) return Dropped{FrameDrop::Loss};

  const SimTime deliver_at = start + ser + p.latency_ms;
  Delivery d{id, src, dst, std::move(frame), at, deliver_at, next_seq_};
  push(deliver_at, DeliverEvent{std::move(d)});
  return Scheduled{deliver_at};
}

std::vector<Delivery> Simulator::advance(SimTime until) {
  if (until < now_) throw Error(Errc::InvalidArgument, "advance into the past");
  std::vector<Delivery> out;
  while (!queue_.empty() && queue_.top().time <= until) {
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ = ev.time;
    if (auto* deliver = std::get_if<DeliverEvent>(&ev.body)) {
      Delivery& d = deliver->delivery;
      Link& link = link_ref(d.link);
      Direction& dir = (d.src == d.link.a) ? link.forward : link.backward;
      dir.delivered.emplace_back(d.at, static_cast<std::uint64_t>(d.frame.size()) * 8);
      prune(dir);
      if (delivery_handler_) delivery_handler_(d);
      out.push_back(std::move(d));
    } else if (auto* change = std::get_if<ProfileEvent>(&ev.body)) {
      Link& link = link_ref(change->link);
      auto it = link.pending.find(ev.time);
      if (it != link.pending.end()) {
        const LinkProfile next = it->second;
        link.pending.erase(it);
        replace_base(change->link, next);
      }
    } else if (auto* timer = std::get_if<TimerEvent>(&ev.body)) {
      timer->fn();
    }
  }
  now_ = until;
  return out;
}

void Simulator::prune(Direction& dir) const {
  while (!dir.delivered.empty() && dir.delivered.front().first <= now_ - kHistoryMs) {
    dir.delivered.pop_front();
  }
}

void Simulator::replace_base(const LinkId& id, const LinkProfile& profile) {
  Link& link = link_ref(id);
  const LinkProfile before = effective(id, link.base);
  link.base = profile;
  notify(id, before);
}

void Simulator::notify(const LinkId& id, const LinkProfile& before) {
  const LinkProfile after = profile(id);
  if (before != after && link_listener_) link_listener_(id, before, after);
}

void Simulator::apply_schedule(const LinkSchedule& schedule) {
  Link& link = link_ref(schedule.link);
  for (std::size_t i = 0; i < schedule.changes.size(); ++i) {
    const LinkChange& c = schedule.changes[i];
    validate(c.profile);
    if (i > 0 && c.at_ms <= schedule.changes[i - 1].at_ms) {
      throw Error(Errc::InvalidArgument, "schedule changes must strictly increase");
    }
    if (c.at_ms < now_) throw Error(Errc::InvalidArgument, "schedule change in the past");
  }
  for (const LinkChange& c : schedule.changes) {
    link.pending[c.at_ms] = c.profile;
    push(c.at_ms, ProfileEvent{schedule.link, c.profile});
  }
}

void Simulator::set_profile(const LinkId& link, const LinkProfile& profile) {
  validate(profile);
  replace_base(link, profile);
}

double Simulator::measure_bandwidth(const LinkId& link, SimTime window_ms) const {
  if (window_ms <= 0) throw Error(Errc::InvalidArgument, "window_ms must be > 0");
  const Link& l = link_ref(link);
  std::uint64_t bits = 0;
  for (const Direction* dir : {&l.forward, &l.backward}) {
    for (const auto& [at, b] : dir->delivered) {
      if (at > now_ - window_ms && at <= now_) bits += b;
    }
  }
  return static_cast<double>(bits) * 1000.0 / static_cast<double>(window_ms);
}

std::uint64_t Simulator::probe_bandwidth(const LinkId& link) const {
  const LinkProfile p = profile(link);
  return p.up ? p.bandwidth_bps : 0;
}

SimTime Simulator::queue_delay(const NodeId& src, const NodeId& dst) const {
  const LinkId id = LinkId::of(src, dst);
  const Link& link = link_ref(id);
  const Direction& dir = (src == id.a) ? link.forward : link.backward;
  return std::max<SimTime>(0, dir.busy_until - now_);
}

void Simulator::partition(const std::vector<std::set<NodeId>>& groups) {
  std::map<NodeId, int> group_of;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const NodeId& n : groups[g]) {
      if (!has_node(n)) throw Error(Errc::UnknownNode, n);
      if (!group_of.emplace(n, static_cast<int>(g)).second) {
        throw Error(Errc::OverlappingGroups, n);
      }
    }
  }
  // Nodes not named in any group form one implicit remaining group.
  auto group = [&](const NodeId& n) {
    auto it = group_of.find(n);
    return it == group_of.end() ? -1 : it->second;
  };
  std::map<LinkId, LinkProfile> before;
  for (const auto& [id, link] : links_) before[id] = effective(id, link.base);
  cut_.clear();
  for (const auto& [id, _] : links_) {
    if (group(id.a) != group(id.b)) cut_.insert(id);
  }
  for (const auto& [id, p] : before) notify(id, p);
}

void Simulator::heal() {
  std::map<LinkId, LinkProfile> before;
  for (const auto& [id, link] : links_) before[id] = effective(id, link.base);
  cut_.clear();
  for (const auto& [id, p] : before) notify(id, p);
}

std::uint64_t Simulator::schedule_at(SimTime at, std::function<void()> fn) {
  if (at < now_) at = now_;
  const std::uint64_t seq = next_seq_;
  push(at, TimerEvent{std::move(fn)});
  return seq;
}

}  // namespace edgetb::simnet
