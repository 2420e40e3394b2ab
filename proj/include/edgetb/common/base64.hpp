#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "edgetb/common/types.hpp"

namespace edgetb {

// Standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> data);

// Strict: rejects non-alphabet characters, bad padding and non-canonical
// trailing bits.
std::optional<Bytes> base64_decode(std::string_view text);

}  // namespace edgetb
