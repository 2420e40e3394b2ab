#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgetb/common/event_sink.hpp"
#include "edgetb/common/types.hpp"

namespace edgetb::control {

// Append-only JSON-lines log. Each record is {"t", "seq", "type", ...fields}
// in emission order, which is the (t, seq) order of the simulation.
class EventLog final : public EventSink {
 public:
  using Clock = std::function<SimTime()>;

  EventLog();
  ~EventLog() override;
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void set_clock(Clock clock) { clock_ = std::move(clock); }
  // Mirrors every subsequent line to `out`.
  void tee(std::ostream* out) { tee_ = out; }

  void emit(std::string_view type, Fields fields) override;

  std::size_t size() const;
  std::vector<std::string> lines_since(std::size_t cursor) const;
  std::vector<std::string> lines() const { return lines_since(0); }
  std::vector<nlohmann::json> records() const;
  std::size_t count(std::string_view type) const;
  // SHA-256 hex over every line, each terminated by '\n'.
  std::string content_hash() const;

 private:
  struct HashState;

  Clock clock_;
  std::ostream* tee_ = nullptr;
  mutable std::mutex mutex_;
  std::vector<std::string> lines_;
  std::map<std::string, std::size_t, std::less<>> counts_;
  std::unique_ptr<HashState> hash_;
};

}  // namespace edgetb::control
