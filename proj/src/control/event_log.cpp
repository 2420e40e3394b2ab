#include "edgetb/control/event_log.hpp"

#include <sodium.h>

#include "edgetb/common/checksum.hpp"

namespace edgetb::control {

struct EventLog::HashState {
  crypto_hash_sha256_state state;
};

EventLog::EventLog() : hash_(std::make_unique<HashState>()) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
  crypto_hash_sha256_init(&hash_->state);
}

EventLog::~EventLog() = default;

void EventLog::emit(std::string_view type, Fields fields) {
  Fields record;
  record["t"] = clock_ ? clock_() : 0;
  std::lock_guard lock(mutex_);
  record["seq"] = lines_.size();
  record["type"] = type;
  for (auto& [key, value] : fields.items()) {
    if (key == "t" || key == "seq" || key == "type") {
      throw std::logic_error("event field '" + key + "' collides with the record header");
    }
    record[key] = std::move(value);
  }
  std::string line = record.dump();
  line.push_back('\n');
  crypto_hash_sha256_update(&hash_->state, reinterpret_cast<const unsigned char*>(line.data()),
                            line.size());
  if (tee_) *tee_ << line;
  line.pop_back();
  lines_.push_back(std::move(line));
  ++counts_[std::string(type)];
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mutex_);
  return lines_.size();
}

std::vector<std::string> EventLog::lines_since(std::size_t cursor) const {
  std::lock_guard lock(mutex_);
  if (cursor >= lines_.size()) return {};
  return {lines_.begin() + static_cast<std::ptrdiff_t>(cursor), lines_.end()};
}

std::vector<nlohmann::json> EventLog::records() const {
  std::vector<nlohmann::json> out;
  for (const auto& line : lines()) out.push_back(nlohmann::json::parse(line));
  return out;
}

std::size_t EventLog::count(std::string_view type) const {
  std::lock_guard lock(mutex_);
  auto it = counts_.find(type);
  return it == counts_.end() ? 0 : it->second;
}

std::string EventLog::content_hash() const {
  std::lock_guard lock(mutex_);
  crypto_hash_sha256_state copy = hash_->state;
  std::array<std::uint8_t, crypto_hash_sha256_BYTES> digest{};
  crypto_hash_sha256_final(&copy, digest.data());
  return to_hex(digest);
}

}  // namespace edgetb::control
