#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "edgetb/common/error.hpp"
#include "edgetb/distrib/message.hpp"

namespace edgetb::gateway {

using distrib::Message;

enum class Field { Topic, Priority, Payload, Origin, Seq, CreatedAt };

std::string_view to_string(Field field);

// A decode failure, positioned at the byte offset where it was detected
// within the input handed to the gateway.
class CodecError : public Error {
 public:
  CodecError(Errc code, std::size_t offset, const std::string& detail)
      : Error(code, "at byte " + std::to_string(offset) + (detail.empty() ? "" : ": " + detail)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class Codec {
 public:
  virtual ~Codec() = default;
  virtual std::string id() const = 0;
  // Message fields the wire format carries. Every codec must carry at least
  // topic, priority and payload.
  virtual std::set<Field> capabilities() const = 0;
  // Throws Unrepresentable when the message cannot be expressed.
  virtual Bytes encode(const Message& message) const = 0;
  // Decodes the message at the start of `bytes`, setting `consumed`.
  // Throws Error; offsets inside the error are relative to `bytes`.
  virtual Message decode_prefix(std::span<const std::uint8_t> bytes, std::size_t& consumed) const = 0;

  // Exactly one message spanning all of `bytes`.
  Message decode(std::span<const std::uint8_t> bytes) const;
};

// distrib frame format.
class BinaryCodec final : public Codec {
 public:
  std::string id() const override { return "bin.v1"; }
  std::set<Field> capabilities() const override;
  Bytes encode(const Message& message) const override;
  Message decode_prefix(std::span<const std::uint8_t> bytes, std::size_t& consumed) const override;
};

// topic "|" priority "|" base64(payload) "\n"
class TextLineCodec final : public Codec {
 public:
  std::string id() const override { return "text.v1"; }
  std::set<Field> capabilities() const override;
  Bytes encode(const Message& message) const override;
  Message decode_prefix(std::span<const std::uint8_t> bytes, std::size_t& consumed) const override;
};

// Adapter for codecs defined by a pair of functions (used by bindings and
// tests).
class FunctionCodec final : public Codec {
 public:
  using EncodeFn = std::function<Bytes(const Message&)>;
  using DecodeFn = std::function<Message(std::span<const std::uint8_t>, std::size_t&)>;

  FunctionCodec(std::string id, std::set<Field> caps, EncodeFn encode, DecodeFn decode);
  std::string id() const override { return id_; }
  std::set<Field> capabilities() const override { return caps_; }
  Bytes encode(const Message& message) const override { return encode_(message); }
  Message decode_prefix(std::span<const std::uint8_t> bytes, std::size_t& consumed) const override {
    return decode_(bytes, consumed);
  }

 private:
  std::string id_;
  std::set<Field> caps_;
  EncodeFn encode_;
  DecodeFn decode_;
};

class CodecRegistry {
 public:
  // Pre-registers bin.v1 and text.v1.
  CodecRegistry();

  // DuplicateId on a reused id, IncompleteCodec when a required field is
  // missing from the declared capabilities.
  void register_codec(std::shared_ptr<const Codec> codec);
  const Codec& get(const std::string& id) const;  // UnknownCodec
  bool contains(const std::string& id) const { return codecs_.count(id) > 0; }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::shared_ptr<const Codec>> codecs_;
};

// Decodes one message with `from` and re-encodes it with `to`.
Bytes translate(const CodecRegistry& registry, std::span<const std::uint8_t> bytes,
                const std::string& from, const std::string& to);

struct StreamResult {
  Bytes output;
  std::size_t messages = 0;
};

// Translates a concatenation of messages in order. All-or-nothing: on any
// error nothing is returned and the CodecError carries the absolute offset.
StreamResult translate_stream(const CodecRegistry& registry, std::span<const std::uint8_t> bytes,
                              const std::string& from, const std::string& to);

}  // namespace edgetb::gateway
