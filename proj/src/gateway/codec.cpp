#include "edgetb/gateway/codec.hpp"

#include <algorithm>

#include "edgetb/common/base64.hpp"
#include "edgetb/distrib/frame.hpp"

namespace edgetb::gateway {

namespace {

const std::set<Field> kRequired{Field::Topic, Field::Priority, Field::Payload};

Message decode_at(const Codec& codec, std::span<const std::uint8_t> bytes, std::size_t base,
                  std::size_t& consumed) {
  try {
    return codec.decode_prefix(bytes, consumed);
  } catch (const CodecError& e) {
    throw CodecError(e.code(), base + e.offset(), codec.id());
  } catch (const Error& e) {
    throw CodecError(e.code(), base, codec.id() + ": " + e.detail());
  }
}

}  // namespace

std::string_view to_string(Field field) {
  switch (field) {
    case Field::Topic: return "topic";
    case Field::Priority: return "priority";
    case Field::Payload: return "payload";
    case Field::Origin: return "origin";
    case Field::Seq: return "seq";
    case Field::CreatedAt: return "created_at";
  }
  return "?";
}

Message Codec::decode(std::span<const std::uint8_t> bytes) const {
  std::size_t consumed = 0;
  Message m = decode_prefix(bytes, consumed);
  if (consumed != bytes.size()) {
    throw CodecError(Errc::Malformed, consumed, "trailing bytes after message");
  }
  return m;
}

std::set<Field> BinaryCodec::capabilities() const { return kRequired; }

Bytes BinaryCodec::encode(const Message& message) const { return distrib::encode_frame(message); }

Message BinaryCodec::decode_prefix(std::span<const std::uint8_t> bytes,
                                   std::size_t& consumed) const {
  return distrib::decode_frame_prefix(bytes, consumed);
}

std::set<Field> TextLineCodec::capabilities() const { return kRequired; }

Bytes TextLineCodec::encode(const Message& message) const {
  if (message.topic.find_first_of("|\n") != std::string::npos) {
    throw Error(Errc::Unrepresentable, "text.v1 topic contains '|' or newline");
  }
  if (message.priority > distrib::kLowestPriority) {
    throw Error(Errc::Unrepresentable, "priority > 3");
  }
  std::string line = message.topic;
  line += '|';
  line += static_cast<char>('0' + message.priority);
  line += '|';
  line += base64_encode(message.payload);
  line += '\n';
  return Bytes(line.begin(), line.end());
}

Message TextLineCodec::decode_prefix(std::span<const std::uint8_t> bytes,
                                     std::size_t& consumed) const {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw CodecError(Errc::Truncated, bytes.size(), "missing newline");
  const std::string_view line(reinterpret_cast<const char*>(bytes.data()),
                              static_cast<std::size_t>(nl - bytes.begin()));
  const auto bar1 = line.find('|');
  if (bar1 == std::string_view::npos) throw CodecError(Errc::Malformed, line.size(), "expected '|'");
  const auto bar2 = line.find('|', bar1 + 1);
  if (bar2 == std::string_view::npos) throw CodecError(Errc::Malformed, line.size(), "expected '|'");
  const std::string_view prio = line.substr(bar1 + 1, bar2 - bar1 - 1);
  if (prio.size() != 1 || prio[0] < '0' || prio[0] > '3') {
    throw CodecError(Errc::Malformed, bar1 + 1, "priority must be 0..3");
  }
  const std::string_view b64 = line.substr(bar2 + 1);
  if (b64.find('|') != std::string_view::npos) {
    throw CodecError(Errc::Malformed, bar2 + 1 + b64.find('|'), "unexpected '|'");
  }
  auto payload = base64_decode(b64);
  if (!payload) throw CodecError(Errc::Malformed, bar2 + 1, "invalid base64");
  Message m;
  m.topic = std::string(line.substr(0, bar1));
  m.priority = static_cast<std::uint8_t>(prio[0] - '0');
  m.payload = std::move(*payload);
  consumed = line.size() + 1;
  return m;
}

FunctionCodec::FunctionCodec(std::string id, std::set<Field> caps, EncodeFn encode, DecodeFn decode)
    : id_(std::move(id)), caps_(std::move(caps)), encode_(std::move(encode)), decode_(std::move(decode)) {
  if (!encode_ || !decode_) throw Error(Errc::InvalidArgument, "codec " + id_ + " missing functions");
}

CodecRegistry::CodecRegistry() {
  register_codec(std::make_shared<BinaryCodec>());
  register_codec(std::make_shared<TextLineCodec>());
}

void CodecRegistry::register_codec(std::shared_ptr<const Codec> codec) {
  if (!codec) throw Error(Errc::InvalidArgument, "null codec");
  const std::string id = codec->id();
  if (id.empty()) throw Error(Errc::InvalidArgument, "empty codec id");
  if (codecs_.count(id)) throw Error(Errc::DuplicateId, id);
  const auto caps = codec->capabilities();
  for (Field f : kRequired) {
    if (!caps.count(f)) {
      throw Error(Errc::IncompleteCodec, id + " cannot carry " + std::string(to_string(f)));
    }
  }
  codecs_.emplace(id, std::move(codec));
}

const Codec& CodecRegistry::get(const std::string& id) const {
  auto it = codecs_.find(id);
  if (it == codecs_.end()) throw Error(Errc::UnknownCodec, id);
  return *it->second;
}

std::vector<std::string> CodecRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : codecs_) out.push_back(id);
  return out;
}

Bytes translate(const CodecRegistry& registry, std::span<const std::uint8_t> bytes,
                const std::string& from, const std::string& to) {
  const Codec& in = registry.get(from);
  const Codec& out = registry.get(to);
  std::size_t consumed = 0;
  Message m = decode_at(in, bytes, 0, consumed);
  if (consumed != bytes.size()) throw CodecError(Errc::Malformed, consumed, "trailing bytes");
  return out.encode(m);
}

StreamResult translate_stream(const CodecRegistry& registry, std::span<const std::uint8_t> bytes,
                              const std::string& from, const std::string& to) {
  const Codec& in = registry.get(from);
  const Codec& out = registry.get(to);
  StreamResult result;
  result.output.reserve(bytes.size());
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t consumed = 0;
    Message m = decode_at(in, bytes.subspan(pos), pos, consumed);
    if (consumed == 0) throw CodecError(Errc::Malformed, pos, "codec consumed nothing");
    Bytes encoded;
    try {
      encoded = out.encode(m);
    } catch (const Error& e) {
      throw CodecError(e.code(), pos, e.detail());
    }
    result.output.insert(result.output.end(), encoded.begin(), encoded.end());
    ++result.messages;
    pos += consumed;
  }
  return result;
}

}  // namespace edgetb::gateway
