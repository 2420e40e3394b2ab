#pragma once

#include <string>
#include <variant>

#include "edgetb/common/types.hpp"

namespace edgetb::security {

enum class PostureLevel { Normal, Elevated, Lockdown };

std::string_view to_string(PostureLevel level);
PostureLevel parse_posture_level(std::string_view text);

struct SecurityPosture {
  PostureLevel level = PostureLevel::Normal;
  SimTime changed_at = 0;
  std::string cause = "initial";
};

struct ThreatTrigger {
  bool threat = true;
};
struct OperatorTrigger {
  PostureLevel level = PostureLevel::Normal;
};
using PostureTrigger = std::variant<ThreatTrigger, OperatorTrigger>;

// "threat", "threat_clear", "operator:<level>"; anything else is UnknownTrigger.
PostureTrigger parse_posture_trigger(std::string_view text);

// Threat raises lockdown; clearing a threat leaves the posture for the
// operator to lower. Operator commands set any level.
SecurityPosture apply_posture(const SecurityPosture& current, const PostureTrigger& trigger,
                              SimTime now);

struct EgressRequest {
  bool topic_critical = false;
  bool holds_critical_right = false;  // a currently valid token grants "critical"
  bool holds_publish_right = false;   // a currently valid token grants publish:<topic>
};

// Under lockdown only mission-critical topics backed by a "critical" token
// may leave the node; elevated requires a publish right.
bool egress_permitted(PostureLevel level, const EgressRequest& request);

}  // namespace edgetb::security
