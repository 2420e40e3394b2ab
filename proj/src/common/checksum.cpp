#include "edgetb/common/checksum.hpp"

#include <algorithm>

#include <sodium.h>
#include <zlib.h>

namespace edgetb {

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  // zlib takes uInt lengths; feed large inputs in pieces.
  uLong c = ::crc32(0L, Z_NULL, 0);
  while (!data.empty()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(data.size(), 1u << 30));
    c = ::crc32(c, data.data(), n);
    data = data.subspan(n);
  }
  return static_cast<std::uint32_t>(c);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char ch : data) {
    h ^= static_cast<std::uint8_t>(ch);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, crypto_hash_sha256_BYTES> digest{};
  crypto_hash_sha256(digest.data(), data.data(), data.size());
  return to_hex(digest);
}

std::string sha256_hex(std::string_view data) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(data.data()),
                              data.size()));
}

}  // namespace edgetb
