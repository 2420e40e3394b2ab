#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "edgetb/common/types.hpp"

namespace edgetb {

// Unsigned base-128 varint: little-endian 7-bit groups, high bit = continuation.
void put_varint(Bytes& out, std::uint64_t value);

// Reads a varint at `pos`, advancing it. nullopt when the input ends mid-value
// or the encoding runs past 10 bytes.
std::optional<std::uint64_t> get_varint(std::span<const std::uint8_t> in,
                                        std::size_t& pos);

void put_bytes(Bytes& out, std::span<const std::uint8_t> data);
void put_string(Bytes& out, std::string_view s);  // varint length + bytes

std::size_t varint_size(std::uint64_t value);

}  // namespace edgetb
