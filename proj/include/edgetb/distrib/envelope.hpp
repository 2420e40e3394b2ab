#pragma once

#include <cstdint>
#include <span>
#include <variant>

#include "edgetb/distrib/message.hpp"

namespace edgetb::distrib {

// Transport envelope wrapped around a frame on simulated links. Carries the
// message identity and timing that the frame itself does not.
struct DataEnvelope {
  bool reliable = false;
  NodeId origin;
  std::uint64_t seq = 0;
  SimTime created_at = 0;
  SimTime trace_start = 0;
  Bytes frame;
};

struct AckEnvelope {
  NodeId origin;
  std::uint64_t seq = 0;
};

using Envelope = std::variant<DataEnvelope, AckEnvelope>;

Bytes encode_envelope(const Envelope& envelope);
Envelope decode_envelope(std::span<const std::uint8_t> bytes);

}  // namespace edgetb::distrib
