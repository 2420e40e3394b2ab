#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>

#include "edgetb/common/error.hpp"

#include "edgetb/distrib/message.hpp"

namespace edgetb::distrib {

inline constexpr std::uint8_t kFrameMagic = 0xED;
inline constexpr std::uint8_t kFrameVersion = 0x01;

// Layout: magic, version, varint topic_len, topic, priority, varint
// payload_len, payload, CRC-32 (little-endian) over everything before it.
// Only topic, priority and payload travel in the frame.
Bytes encode_frame(const Message& message);

// Decodes exactly one frame spanning all of `bytes`.
Message decode_frame(std::span<const std::uint8_t> bytes);

// Decodes the frame at the start of `bytes`; sets `consumed` to its length.
Message decode_frame_prefix(std::span<const std::uint8_t> bytes, std::size_t& consumed);

// Same checks as decode_frame, reported without throwing.
std::variant<Message, Errc> try_decode_frame(std::span<const std::uint8_t> bytes);

std::size_t encoded_frame_size(const Message& message);

}  // namespace edgetb::distrib
