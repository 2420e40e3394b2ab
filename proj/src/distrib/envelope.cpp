#include "edgetb/distrib/envelope.hpp"

#include "edgetb/common/error.hpp"
#include "edgetb/common/varint.hpp"

namespace edgetb::distrib {

namespace {

constexpr std::uint8_t kData = 0;
constexpr std::uint8_t kAck = 1;

std::string get_string(std::span<const std::uint8_t> in, std::size_t& pos) {
  const auto len = get_varint(in, pos);
  if (!len || *len > in.size() - pos) throw Error(Errc::Truncated, "envelope string");
  std::string s(in.begin() + pos, in.begin() + pos + *len);
  pos += *len;
  return s;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
  const auto v = get_varint(in, pos);
  if (!v) throw Error(Errc::Truncated, "envelope field");
  return *v;
}

}  // namespace

Bytes encode_envelope(const Envelope& envelope) {
  Bytes out;
  if (const auto* data = std::get_if<DataEnvelope>(&envelope)) {
    out.push_back(kData);
    out.push_back(data->reliable ? 1 : 0);
    put_string(out, data->origin);
    put_varint(out, data->seq);
    put_varint(out, static_cast<std::uint64_t>(data->created_at));
    put_varint(out, static_cast<std::uint64_t>(data->trace_start));
    put_bytes(out, data->frame);
  } else {
    const auto& ack = std::get<AckEnvelope>(envelope);
    out.push_back(kAck);
    put_string(out, ack.origin);
    put_varint(out, ack.seq);
  }
  return out;
}

Envelope decode_envelope(std::span<const std::uint8_t> in) {
  if (in.empty()) throw Error(Errc::Truncated, "empty envelope");
  std::size_t pos = 1;
  if (in[0] == kData) {
    if (in.size() < 2) throw Error(Errc::Truncated, "envelope flags");
    DataEnvelope data;
    data.reliable = (in[pos++] & 1) != 0;
    data.origin = get_string(in, pos);
    data.seq = get_u64(in, pos);
    data.created_at = static_cast<SimTime>(get_u64(in, pos));
    data.trace_start = static_cast<SimTime>(get_u64(in, pos));
    data.frame.assign(in.begin() + pos, in.end());
    return data;
  }
  if (in[0] == kAck) {
    AckEnvelope ack;
    ack.origin = get_string(in, pos);
    ack.seq = get_u64(in, pos);
    return ack;
  }
  throw Error(Errc::Malformed, "envelope kind " + std::to_string(in[0]));
}

}  // namespace edgetb::distrib
