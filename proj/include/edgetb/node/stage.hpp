#pragma once

#include <cstdint>
#include <string>

namespace edgetb::node {

// Synthetic compute kernel standing in for an inference step: only its
// resource signature matters. A "gateway" stage re-encodes payloads between
// two registered codecs instead of producing synthetic bytes.
struct StageSpec {
  std::string name;
  double cpu_demand = 0.0;     // work-units/second reserved on the host
  double mem_demand = 0.0;     // MB
  double per_item_cost = 1.0;  // work-units per item
  std::string input_topic;
  std::string output_topic;
  std::uint32_t output_size = 64;  // bytes per produced item
  std::uint8_t priority = 2;       // 0 most important .. 3 evicted first
  std::string kind = "compute";    // "compute" | "gateway"
  std::string codec_from;
  std::string codec_to;

  // Items per second the stage can serve with its reserved share.
  double service_rate() const { return per_item_cost > 0 ? cpu_demand / per_item_cost : 0.0; }
  bool operator==(const StageSpec&) const = default;
};

}  // namespace edgetb::node
