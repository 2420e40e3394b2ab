#pragma once

#include <string_view>

#include "edgetb/common/types.hpp"

namespace edgetb::distrib {

// Per-topic payload compressors: "identity" and "deflate".
Bytes compress(std::string_view scheme, const Bytes& payload);
Bytes decompress(std::string_view scheme, const Bytes& payload);
bool known_compressor(std::string_view scheme);

}  // namespace edgetb::distrib
