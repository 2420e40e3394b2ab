#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace edgetb {

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320, init/xorout 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> data);

// FNV-1a 64, used for message-id slot hashing and RNG stream derivation.
std::uint64_t fnv1a64(std::string_view data);

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> data);

}  // namespace edgetb
