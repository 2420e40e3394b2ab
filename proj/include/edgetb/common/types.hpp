#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace edgetb {

using NodeId = std::string;
using Bytes = std::vector<std::uint8_t>;

// Simulated time in integer milliseconds.
using SimTime = std::int64_t;

// Unordered pair of node ids; `a` is always the lexicographically smaller end.
struct LinkId {
  NodeId a;
  NodeId b;

  static LinkId of(const NodeId& x, const NodeId& y) {
    return x < y ? LinkId{x, y} : LinkId{y, x};
  }

  bool touches(const NodeId& n) const { return a == n || b == n; }
  const NodeId& other(const NodeId& n) const { return a == n ? b : a; }
  std::string str() const { return a + "~" + b; }

  auto operator<=>(const LinkId&) const = default;
};

}  // namespace edgetb
