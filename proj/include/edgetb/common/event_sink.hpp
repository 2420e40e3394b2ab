#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace edgetb {

using Fields = nlohmann::ordered_json;

// Receives state-change records from domain modules. The control layer
// stamps them with sim time and sequence number.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void emit(std::string_view type, Fields fields) = 0;
};

class NullSink final : public EventSink {
 public:
  void emit(std::string_view, Fields) override {}
};

}  // namespace edgetb
