#pragma once

#include <random>
#include <string>

#include "edgetb/common/types.hpp"
#include "edgetb/distrib/message.hpp"

namespace edgetb::test {

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

// Topics avoid '|' and '\n' so every codec can carry them.
inline std::string random_topic(std::mt19937_64& rng, std::size_t max_len = 24) {
  static constexpr std::string_view alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789/._-:#";
  std::string t(rng() % (max_len + 1), ' ');
  for (auto& c : t) c = alphabet[rng() % alphabet.size()];
  return t;
}

inline distrib::Message random_message(std::mt19937_64& rng, std::size_t max_payload = 512) {
  distrib::Message m;
  m.topic = random_topic(rng);
  m.priority = static_cast<std::uint8_t>(rng() % 4);
  m.payload = random_bytes(rng, rng() % (max_payload + 1));
  return m;
}

}  // namespace edgetb::test
