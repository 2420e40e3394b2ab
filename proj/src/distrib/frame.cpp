#include "edgetb/distrib/frame.hpp"

#include <optional>

#include "edgetb/common/checksum.hpp"
#include "edgetb/common/error.hpp"
#include "edgetb/common/varint.hpp"

namespace edgetb::distrib {

namespace {

constexpr std::uint64_t kMaxField = 0xFFFFFFFFull;

}  // namespace

std::uint64_t MessageId::hash() const { return fnv1a64(str()); }

void validate(const QosProfile& qos) {
  if (qos.history_depth < 1) throw Error(Errc::InvalidArgument, "history_depth < 1");
  if (qos.bundle_ttl_ms <= 0) throw Error(Errc::InvalidArgument, "bundle ttl <= 0");
  if (qos.deadline_ms && *qos.deadline_ms <= 0) {
    throw Error(Errc::InvalidArgument, "deadline_ms <= 0");
  }
}

std::size_t encoded_frame_size(const Message& m) {
  return 2 + varint_size(m.topic.size()) + m.topic.size() + 1 +
         varint_size(m.payload.size()) + m.payload.size() + 4;
}

Bytes encode_frame(const Message& m) {
  if (m.topic.size() > kMaxField) throw Error(Errc::Oversize, "topic");
  if (m.payload.size() > kMaxField) throw Error(Errc::Oversize, "payload");
  if (m.priority > kLowestPriority) {
    throw Error(Errc::InvalidArgument, "priority " + std::to_string(m.priority));
  }
  Bytes out;
  out.reserve(encoded_frame_size(m));
  out.push_back(kFrameMagic);
  out.push_back(kFrameVersion);
  put_string(out, m.topic);
  out.push_back(m.priority);
  put_varint(out, m.payload.size());
  put_bytes(out, m.payload);
  const std::uint32_t crc = crc32(out);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  return out;
}

namespace {

struct Fault {
  Errc code;
  const char* detail;
};

// Shared by the throwing and non-throwing decoders; copies fields into `out`
// only after the checksum matches.
std::optional<Fault> parse_prefix(std::span<const std::uint8_t> in, std::size_t& consumed,
                                  Message* out) {
  if (in.empty()) return Fault{Errc::Truncated, "empty input"};
  if (in[0] != kFrameMagic) return Fault{Errc::BadMagic, "at offset 0"};
  if (in.size() < 2) return Fault{Errc::Truncated, "missing version"};
  if (in[1] != kFrameVersion) return Fault{Errc::BadVersion, "unsupported version"};

  std::size_t pos = 2;
  const auto topic_len = get_varint(in, pos);
  if (!topic_len) return Fault{Errc::Truncated, "topic length"};
  if (*topic_len > kMaxField || *topic_len > in.size() - pos) return Fault{Errc::Truncated, "topic"};
  const std::size_t topic_at = pos;
  pos += *topic_len;
  if (pos >= in.size()) return Fault{Errc::Truncated, "priority"};
  const std::uint8_t priority = in[pos++];
  const auto payload_len = get_varint(in, pos);
  if (!payload_len) return Fault{Errc::Truncated, "payload length"};
  if (*payload_len > kMaxField || *payload_len > in.size() - pos) {
    return Fault{Errc::Truncated, "payload"};
  }
  const std::size_t payload_at = pos;
  pos += *payload_len;
  if (in.size() - pos < 4) return Fault{Errc::Truncated, "checksum"};

  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  if (stored != crc32(in.first(pos))) return Fault{Errc::BadChecksum, "frame"};
  if (priority > kLowestPriority) return Fault{Errc::Malformed, "priority out of range"};
  consumed = pos + 4;
  if (out) {
    out->topic.assign(in.begin() + topic_at, in.begin() + topic_at + *topic_len);
    out->priority = priority;
    out->payload.assign(in.begin() + payload_at, in.begin() + payload_at + *payload_len);
  }
  return std::nullopt;
}

}  // namespace

Message decode_frame_prefix(std::span<const std::uint8_t> in, std::size_t& consumed) {
  Message m;
  if (auto fault = parse_prefix(in, consumed, &m)) throw Error(fault->code, fault->detail);
  return m;
}

Message decode_frame(std::span<const std::uint8_t> bytes) {
  std::size_t consumed = 0;
  Message m = decode_frame_prefix(bytes, consumed);
  if (consumed != bytes.size()) {
    throw Error(Errc::Malformed, "trailing bytes after frame");
  }
  return m;
}

std::variant<Message, Errc> try_decode_frame(std::span<const std::uint8_t> bytes) {
  Message m;
  std::size_t consumed = 0;
  if (auto fault = parse_prefix(bytes, consumed, &m)) return fault->code;
  if (consumed != bytes.size()) return Errc::Malformed;
  return m;
}

}  // namespace edgetb::distrib
