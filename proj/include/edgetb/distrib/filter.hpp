#pragma once

#include <cstdint>
#include <vector>

#include "edgetb/distrib/message.hpp"

namespace edgetb::distrib {

struct FilterItem {
  Message message;
  bool bundle_eligible = false;
};

// Indices into the input list.
struct FilterResult {
  std::vector<std::size_t> send;
  std::vector<std::size_t> defer;
  std::vector<std::size_t> drop;
};

// Greedy selection in (priority, arrival) order: a message is sent when its
// encoded frame still fits the remaining budget, otherwise it is deferred
// (bundle-eligible) or dropped.
FilterResult filter_for_bandwidth(const std::vector<FilterItem>& pending,
                                  std::uint64_t budget_bytes);

}  // namespace edgetb::distrib
