#include "edgetb/store/replica.hpp"

#include <set>
#include <tuple>

#include "edgetb/common/checksum.hpp"
#include "edgetb/common/error.hpp"
#include "edgetb/common/varint.hpp"

namespace edgetb::store {

namespace {

// Total order used for concurrent writes. Tombstones sort below any value.
bool lww_less(const Entry& x, const Entry& y) {
  return std::tie(x.wall, x.writer, x.value) < std::tie(y.wall, y.writer, y.value);
}

std::string get_str(std::span<const std::uint8_t> in, std::size_t& pos) {
  const auto len = get_varint(in, pos);
  if (!len || *len > in.size() - pos) throw Error(Errc::Truncated, "entry string");
  std::string s(in.begin() + pos, in.begin() + pos + *len);
  pos += *len;
  return s;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
  const auto v = get_varint(in, pos);
  if (!v) throw Error(Errc::Truncated, "entry field");
  return *v;
}

}  // namespace

Entry merge(const Entry& local, const Entry& remote) {
  if (local.key != remote.key) throw Error(Errc::KeyMismatch, local.key + " vs " + remote.key);
  const bool local_dom = local.vv.dominates(remote.vv);
  const bool remote_dom = remote.vv.dominates(local.vv);
  Entry out;
  if (remote_dom && !local_dom) {
    out = remote;
  } else if (local_dom && !remote_dom) {
    out = local;
  } else {
    out = lww_less(local, remote) ? remote : local;
  }
  out.vv = local.vv;
  out.vv.merge(remote.vv);
  return out;
}

const Entry& Replica::write(const std::string& key, std::optional<Bytes> value, SimTime now) {
  Entry& e = entries_[key];
  e.key = key;
  e.value = std::move(value);
  e.vv.increment(id_);
  e.wall = now;
  e.writer = id_;
  return e;
}

const Entry& Replica::put(const std::string& key, Bytes value, SimTime now) {
  return write(key, std::move(value), now);
}

const Entry& Replica::remove(const std::string& key, SimTime now) {
  return write(key, std::nullopt, now);
}

std::optional<Bytes> Replica::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

const Entry* Replica::entry(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

Digest Replica::digest() const {
  Digest d;
  for (const auto& [key, e] : entries_) d.emplace(key, e.vv);
  return d;
}

std::vector<Entry> Replica::delta_for(const Digest& peer) const {
  std::vector<Entry> out;
  for (const auto& [key, e] : entries_) {
    auto it = peer.find(key);
    if (it == peer.end() || !it->second.dominates(e.vv)) out.push_back(e);
  }
  return out;
}

std::vector<std::string> Replica::wanted_from(const Digest& peer) const {
  std::vector<std::string> out;
  for (const auto& [key, vv] : peer) {
    auto it = entries_.find(key);
    if (it == entries_.end() || !it->second.vv.dominates(vv)) out.push_back(key);
  }
  return out;
}

std::size_t Replica::apply(const std::vector<Entry>& remote) {
  std::size_t changed = 0;
  for (const Entry& r : remote) {
    auto it = entries_.find(r.key);
    if (it == entries_.end()) {
      entries_.emplace(r.key, r);
      ++changed;
      continue;
    }
    Entry merged = merge(it->second, r);
    if (!(merged == it->second)) {
      it->second = std::move(merged);
      ++changed;
    }
  }
  return changed;
}

std::size_t Replica::purge_tombstones(SimTime now, SimTime ttl_ms) {
  std::size_t purged = 0;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->second.tombstone() && now - it->second.wall >= ttl_ms) {
      it = entries_.erase(it);
      ++purged;
    } else {
      ++it;
    }
  }
  return purged;
}

Bytes encode_entry(const Entry& e) {
  Bytes out;
  put_string(out, e.key);
  out.push_back(e.value ? 1 : 0);
  if (e.value) {
    put_varint(out, e.value->size());
    put_bytes(out, *e.value);
  }
  put_varint(out, e.vv.counters().size());
  for (const auto& [node, counter] : e.vv.counters()) {
    put_string(out, node);
    put_varint(out, counter);
  }
  put_varint(out, static_cast<std::uint64_t>(e.wall));
  put_string(out, e.writer);
  return out;
}

Entry decode_entry(std::span<const std::uint8_t> in, std::size_t& pos) {
  Entry e;
  e.key = get_str(in, pos);
  if (pos >= in.size()) throw Error(Errc::Truncated, "entry value flag");
  const bool has_value = in[pos++] != 0;
  if (has_value) {
    const std::string v = get_str(in, pos);
    e.value = Bytes(v.begin(), v.end());
  }
  const std::uint64_t n = get_u64(in, pos);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::string node = get_str(in, pos);
    e.vv.set(node, get_u64(in, pos));
  }
  e.wall = static_cast<SimTime>(get_u64(in, pos));
  e.writer = get_str(in, pos);
  return e;
}

std::string Replica::content_hash() const {
  Bytes all;
  for (const auto& [_, e] : entries_) put_bytes(all, encode_entry(e));
  return sha256_hex(all);
}

std::size_t anti_entropy_round(Replica& replica, Replica& peer, bool link_up) {
  if (!link_up) throw Error(Errc::LinkDown, replica.id() + "~" + peer.id());
  const Digest mine = replica.digest();
  const Digest theirs = peer.digest();
  const std::vector<Entry> to_peer = replica.delta_for(theirs);
  const std::vector<Entry> to_me = peer.delta_for(mine);
  std::set<std::string> keys;
  for (const Entry& e : to_peer) keys.insert(e.key);
  for (const Entry& e : to_me) keys.insert(e.key);
  peer.apply(to_peer);
  replica.apply(to_me);
  return keys.size();
}

}  // namespace edgetb::store
