#pragma once

#include <cstdint>
#include <map>

#include "edgetb/common/types.hpp"

namespace edgetb::store {

// Per-replica write counters; absent entries read as zero.
class VersionVector {
 public:
  VersionVector() = default;
  VersionVector(std::initializer_list<std::pair<const NodeId, std::uint64_t>> init);

  std::uint64_t get(const NodeId& node) const;
  void set(const NodeId& node, std::uint64_t value);
  std::uint64_t increment(const NodeId& node);

  // a >= b element-wise.
  bool dominates(const VersionVector& other) const;
  bool concurrent_with(const VersionVector& other) const;
  void merge(const VersionVector& other);  // element-wise max

  const std::map<NodeId, std::uint64_t>& counters() const { return counters_; }
  bool operator==(const VersionVector& other) const { return counters_ == other.counters_; }

 private:
  std::map<NodeId, std::uint64_t> counters_;  // zero entries never stored
};

}  // namespace edgetb::store
