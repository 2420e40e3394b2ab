#include "edgetb/security/posture.hpp"

#include "edgetb/common/error.hpp"

namespace edgetb::security {

std::string_view to_string(PostureLevel level) {
  switch (level) {
    case PostureLevel::Normal: return "normal";
    case PostureLevel::Elevated: return "elevated";
    case PostureLevel::Lockdown: return "lockdown";
  }
  return "?";
}

PostureLevel parse_posture_level(std::string_view text) {
  if (text == "normal") return PostureLevel::Normal;
  if (text == "elevated") return PostureLevel::Elevated;
  if (text == "lockdown") return PostureLevel::Lockdown;
  throw Error(Errc::InvalidArgument, "posture level '" + std::string(text) + "'");
}

PostureTrigger parse_posture_trigger(std::string_view text) {
  if (text == "threat") return ThreatTrigger{true};
  if (text == "threat_clear") return ThreatTrigger{false};
  if (text.starts_with("operator:")) {
    try {
      return OperatorTrigger{parse_posture_level(text.substr(9))};
    } catch (const Error&) {
    }
  }
  throw Error(Errc::UnknownTrigger, std::string(text));
}

SecurityPosture apply_posture(const SecurityPosture& current, const PostureTrigger& trigger,
                              SimTime now) {
  SecurityPosture next = current;
  if (const auto* threat = std::get_if<ThreatTrigger>(&trigger)) {
    if (!threat->threat || current.level == PostureLevel::Lockdown) return current;
    next.level = PostureLevel::Lockdown;
    next.cause = "threat";
  } else {
    const auto& op = std::get<OperatorTrigger>(trigger);
    if (op.level == current.level) return current;
    next.level = op.level;
    next.cause = "operator";
  }
  next.changed_at = now;
  return next;
}

bool egress_permitted(PostureLevel level, const EgressRequest& request) {
  switch (level) {
    case PostureLevel::Normal: return true;
    case PostureLevel::Elevated: return request.holds_publish_right;
    case PostureLevel::Lockdown: return request.topic_critical && request.holds_critical_right;
  }
  return false;
}

}  // namespace edgetb::security
