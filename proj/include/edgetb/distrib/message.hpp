#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

#include "edgetb/common/types.hpp"

namespace edgetb::distrib {

// Identity carried in the transport envelope; used for acks, dedup and
// hash-based work splitting.
struct MessageId {
  NodeId origin;
  std::uint64_t seq = 0;

  std::uint64_t hash() const;
  std::string str() const { return origin + ":" + std::to_string(seq); }
  auto operator<=>(const MessageId&) const = default;
};

struct Message {
  std::string topic;
  std::uint8_t priority = 0;  // 0 highest .. 3
  Bytes payload;
  NodeId origin;
  SimTime created_at = 0;
  std::uint64_t seq = 0;
  // Creation time of the source item this message descends from; lets the
  // sink compute end-to-end latency across pipeline stages.
  SimTime trace_start = 0;

  MessageId id() const { return MessageId{origin, seq}; }
  bool operator==(const Message&) const = default;
};

inline constexpr std::uint8_t kLowestPriority = 3;

enum class Reliability { BestEffort, Reliable };

struct QosProfile {
  Reliability reliability = Reliability::BestEffort;
  std::uint32_t history_depth = 1;
  std::optional<SimTime> deadline_ms;
  bool bundle_eligible = false;
  SimTime bundle_ttl_ms = 30'000;

  bool reliable() const { return reliability == Reliability::Reliable; }
};

void validate(const QosProfile& qos);

struct Bundle {
  Message message;
  NodeId destination;
  SimTime ttl_ms = 0;
  NodeId custody;
  SimTime created_at = 0;
  bool reliable = false;

  bool expired(SimTime now) const { return now - created_at > ttl_ms; }
};

}  // namespace edgetb::distrib
