#include "edgetb/distrib/compression.hpp"

#include <zlib.h>

#include "edgetb/common/error.hpp"
#include "edgetb/common/varint.hpp"

namespace edgetb::distrib {

bool known_compressor(std::string_view scheme) {
  return scheme == "identity" || scheme == "deflate";
}

// deflate payloads are prefixed with the original length as a varint.
Bytes compress(std::string_view scheme, const Bytes& payload) {
  if (scheme == "identity") return payload;
  if (scheme != "deflate") throw Error(Errc::InvalidArgument, "compressor " + std::string(scheme));
  uLongf bound = compressBound(payload.size());
  Bytes out;
  put_varint(out, payload.size());
  const std::size_t header = out.size();
  out.resize(header + bound);
  if (compress2(out.data() + header, &bound, payload.data(), payload.size(), 6) != Z_OK) {
    throw Error(Errc::Malformed, "deflate failed");
  }
  out.resize(header + bound);
  return out;
}

Bytes decompress(std::string_view scheme, const Bytes& payload) {
  if (scheme == "identity") return payload;
  if (scheme != "deflate") throw Error(Errc::InvalidArgument, "compressor " + std::string(scheme));
  std::size_t pos = 0;
  const auto size = get_varint(payload, pos);
  if (!size || *size > (1ull << 31)) throw Error(Errc::Malformed, "deflate header");
  Bytes out(*size);
  uLongf len = out.size();
  if (uncompress(out.data(), &len, payload.data() + pos, payload.size() - pos) != Z_OK ||
      len != out.size()) {
    throw Error(Errc::Malformed, "inflate failed");
  }
  return out;
}

}  // namespace edgetb::distrib
