#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgetb/store/version_vector.hpp"

namespace edgetb::store {

struct Entry {
  std::string key;
  std::optional<Bytes> value;  // nullopt = tombstone
  VersionVector vv;
  SimTime wall = 0;
  NodeId writer;

  bool tombstone() const { return !value.has_value(); }
  bool operator==(const Entry&) const = default;
};

// Dominance first; concurrent (or equal-vector) entries resolve by
// (wall, writer) with the value as a final deterministic tiebreak. The
// result carries the element-wise max of both vectors.
Entry merge(const Entry& local, const Entry& remote);

using Digest = std::map<std::string, VersionVector>;

inline constexpr SimTime kDefaultTombstoneTtlMs = 60'000;

// One node's copy of the multi-master store. Reads and writes are purely
// local; replicas converge through anti-entropy.
class Replica {
 public:
  explicit Replica(NodeId id) : id_(std::move(id)) {}

  const NodeId& id() const { return id_; }

  const Entry& put(const std::string& key, Bytes value, SimTime now);
  const Entry& remove(const std::string& key, SimTime now);
  std::optional<Bytes> get(const std::string& key) const;
  const Entry* entry(const std::string& key) const;

  Digest digest() const;
  // Entries this replica holds that the peer's digest does not dominate.
  std::vector<Entry> delta_for(const Digest& peer) const;
  // Keys where the peer's version is not dominated by ours.
  std::vector<std::string> wanted_from(const Digest& peer) const;
  // Merges remote entries; returns how many local entries changed.
  std::size_t apply(const std::vector<Entry>& remote);

  std::size_t purge_tombstones(SimTime now, SimTime ttl_ms = kDefaultTombstoneTtlMs);

  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  // SHA-256 over a canonical encoding of every (key, value, vv).
  std::string content_hash() const;

 private:
  const Entry& write(const std::string& key, std::optional<Bytes> value, SimTime now);

  NodeId id_;
  std::map<std::string, Entry> entries_;
};

// Full bidirectional digest exchange between two directly connected
// replicas. Returns the number of distinct keys transferred. Throws LinkDown
// when `link_up` is false.
std::size_t anti_entropy_round(Replica& replica, Replica& peer, bool link_up = true);

Bytes encode_entry(const Entry& entry);
Entry decode_entry(std::span<const std::uint8_t> bytes, std::size_t& pos);

}  // namespace edgetb::store
