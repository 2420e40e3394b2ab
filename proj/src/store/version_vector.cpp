#include "edgetb/store/version_vector.hpp"

#include <algorithm>

namespace edgetb::store {

VersionVector::VersionVector(
    std::initializer_list<std::pair<const NodeId, std::uint64_t>> init) {
  for (const auto& [node, value] : init) set(node, value);
}

std::uint64_t VersionVector::get(const NodeId& node) const {
  auto it = counters_.find(node);
  return it == counters_.end() ? 0 : it->second;
}

void VersionVector::set(const NodeId& node, std::uint64_t value) {
  if (value == 0) {
    counters_.erase(node);
  } else {
    counters_[node] = value;
  }
}

std::uint64_t VersionVector::increment(const NodeId& node) { return ++counters_[node]; }

bool VersionVector::dominates(const VersionVector& other) const {
  return std::all_of(other.counters_.begin(), other.counters_.end(),
                     [&](const auto& kv) { return get(kv.first) >= kv.second; });
}

bool VersionVector::concurrent_with(const VersionVector& other) const {
  return !dominates(other) && !other.dominates(*this);
}

void VersionVector::merge(const VersionVector& other) {
  for (const auto& [node, value] : other.counters_) {
    auto& mine = counters_[node];
    mine = std::max(mine, value);
  }
}

}  // namespace edgetb::store
